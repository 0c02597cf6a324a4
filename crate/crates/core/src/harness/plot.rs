use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::canvas::{Anchor, Canvas, Color, Mark};
use super::cross::{read_cross_size_episodes, CROSS_EPISODES_FILE};
use super::matrix::RunSpec;
use super::stats::{summarize, Summary};
use crate::env::RegimeMode;
use crate::error::{Error, Result};
use crate::policy::PolicyFamily;
use crate::ppo::{read_log, LogRow, LOG_FILE};

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

/// Seed-aggregated training curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub steps: Vec<f64>,
    pub mean: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// Mean and min–max band over runs, truncated to the shortest log.
pub fn aggregate_seeds(label: &str, logs: &[Vec<LogRow>]) -> Result<Series> {
    let len = logs.iter().map(Vec::len).min().unwrap_or(0);
    if len == 0 {
        return Err(Error::invalid(format!("no log rows for {label}")));
    }
    let mut s = Series {
        label: label.to_string(),
        steps: Vec::with_capacity(len),
        mean: Vec::with_capacity(len),
        lo: Vec::with_capacity(len),
        hi: Vec::with_capacity(len),
    };
    for i in 0..len {
        let vals: Vec<f64> = logs.iter().map(|l| l[i].episodic_reward).collect();
        s.steps.push(logs[0][i].env_steps as f64);
        s.mean.push(vals.iter().sum::<f64>() / vals.len() as f64);
        s.lo.push(vals.iter().copied().fold(f64::INFINITY, f64::min));
        s.hi.push(vals.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }
    Ok(s)
}

fn palette(i: usize) -> Color {
    const P: [Color; 6] = [
        Color(31, 119, 180),
        Color(255, 127, 14),
        Color(44, 160, 44),
        Color(214, 39, 40),
        Color(148, 103, 189),
        Color(140, 86, 75),
    ];
    P[i % P.len()]
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let span = if self.x1 > self.x0 { self.x1 - self.x0 } else { 1.0 };
        LEFT + (x - self.x0) / span * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }
}

fn axes(c: &mut Canvas, f: &Frame, title: &str, xlabel: &str, ylabel: &str) {
    let text = |x, y, t: String, size, anchor| Mark::Text { x, y, text: t, size, anchor };
    for i in 0..=5 {
        let v = f.y0 + (f.y1 - f.y0) * i as f64 / 5.0;
        let y = f.py(v);
        c.push(Mark::Line {
            points: vec![(LEFT, y), (W - RIGHT, y)],
            color: Color::GREY,
            width: 0.5,
        });
        c.push(text(LEFT - 6.0, y + 4.0, format!("{v:.0}"), 11.0, Anchor::End));
    }
    c.push(Mark::Rect {
        x: LEFT,
        y: TOP,
        w: W - LEFT - RIGHT,
        h: H - TOP - BOTTOM,
        fill: None,
        stroke: Color::BLACK,
    });
    c.push(text(W / 2.0 - RIGHT / 2.0, TOP - 14.0, title.to_string(), 14.0, Anchor::Middle));
    c.push(text(W / 2.0 - RIGHT / 2.0, H - 12.0, xlabel.to_string(), 12.0, Anchor::Middle));
    c.push(text(16.0, TOP - 14.0, ylabel.to_string(), 12.0, Anchor::Start));
}

fn legend(c: &mut Canvas, i: usize, label: &str) {
    let y = TOP + 12.0 + 20.0 * i as f64;
    let x = W - RIGHT + 14.0;
    c.push(Mark::Rect {
        x,
        y: y - 8.0,
        w: 14.0,
        h: 10.0,
        fill: Some(palette(i)),
        stroke: palette(i),
    });
    c.push(Mark::Text {
        x: x + 20.0,
        y: y + 1.0,
        text: label.to_string(),
        size: 11.0,
        anchor: Anchor::Start,
    });
}

/// One mean line and min–max band per series.
pub fn training_curve_figure(title: &str, series: &[Series]) -> Canvas {
    let mut c = Canvas::new(W as u32, H as u32);
    let x1 = series.iter().flat_map(|s| s.steps.last().copied()).fold(0.0, f64::max);
    let f = Frame {
        x0: 0.0,
        x1,
        y0: 0.0,
        y1: 100.0,
    };
    axes(&mut c, &f, title, "environment steps", "episodic reward");
    for (i, s) in series.iter().enumerate() {
        let upper = s.steps.iter().zip(&s.hi).map(|(&x, &y)| (f.px(x), f.py(y)));
        let lower = s.steps.iter().zip(&s.lo).rev().map(|(&x, &y)| (f.px(x), f.py(y)));
        c.push(Mark::Polygon {
            points: upper.chain(lower).collect(),
            color: palette(i),
            opacity: 0.2,
        });
        c.push(Mark::Line {
            points: s.steps.iter().zip(&s.mean).map(|(&x, &y)| (f.px(x), f.py(y))).collect(),
            color: palette(i),
            width: 1.5,
        });
        legend(&mut c, i, &s.label);
    }
    c.push(Mark::Text {
        x: W - RIGHT,
        y: H - BOTTOM + 16.0,
        text: format!("{x1:.0}"),
        size: 11.0,
        anchor: Anchor::End,
    });
    c
}

/// Box from the quartiles, whiskers at min and max, line at the median.
pub fn box_plot_figure(title: &str, boxes: &[(String, Summary)]) -> Canvas {
    let mut c = Canvas::new(W as u32, H as u32);
    let f = Frame {
        x0: 0.0,
        x1: boxes.len() as f64,
        y0: 0.0,
        y1: 100.0,
    };
    axes(&mut c, &f, title, "training size", "episodic reward");
    for (i, (label, s)) in boxes.iter().enumerate() {
        let xc = f.px(i as f64 + 0.5);
        let half = (f.px(1.0) - f.px(0.0)) * 0.25;
        c.push(Mark::Rect {
            x: xc - half,
            y: f.py(s.q75),
            w: 2.0 * half,
            h: f.py(s.q25) - f.py(s.q75),
            fill: Some(palette(i)),
            stroke: Color::BLACK,
        });
        let seg = |a: (f64, f64), b: (f64, f64)| Mark::Line {
            points: vec![a, b],
            color: Color::BLACK,
            width: 1.0,
        };
        c.push(seg((xc - half, f.py(s.median)), (xc + half, f.py(s.median))));
        c.push(seg((xc, f.py(s.q75)), (xc, f.py(s.max))));
        c.push(seg((xc, f.py(s.q25)), (xc, f.py(s.min))));
        c.push(seg((xc - half / 2.0, f.py(s.max)), (xc + half / 2.0, f.py(s.max))));
        c.push(seg((xc - half / 2.0, f.py(s.min)), (xc + half / 2.0, f.py(s.min))));
        c.push(Mark::Text {
            x: xc,
            y: H - BOTTOM + 16.0,
            text: label.clone(),
            size: 11.0,
            anchor: Anchor::Middle,
        });
    }
    c
}

fn write_figure(canvas: &Canvas, out: &Path, stem: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let svg = out.join(format!("{stem}.svg"));
    std::fs::write(&svg, canvas.to_svg()).map_err(|e| Error::io(&svg, e))?;
    let png = out.join(format!("{stem}.png"));
    canvas
        .to_image()
        .save(&png)
        .map_err(|e| Error::Format(format!("{}: {e}", png.display())))?;
    written.push(svg);
    written.push(png);
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlotReport {
    pub written: Vec<PathBuf>,
    /// Inputs that were expected but absent or unreadable.
    pub missing: Vec<String>,
}

fn trace_label(family: PolicyFamily, regime: RegimeMode) -> String {
    format!("{} {}", family.as_str(), regime.as_str())
}

/// Training curves per network size from `<runs>/<run name>/log.csv`, and box
/// plots per evaluation size from a `cross_size_episodes.csv` in `runs` or
/// `runs/xeval`.
pub fn emit_plots(runs: &Path, out: &Path) -> Result<PlotReport> {
    let entries = std::fs::read_dir(runs).map_err(|e| Error::io(runs, e))?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut report = PlotReport::default();

    let mut groups: BTreeMap<usize, BTreeMap<(PolicyFamily, RegimeMode), Vec<(u64, Vec<LogRow>)>>> = BTreeMap::new();
    let mut names: Vec<(String, PathBuf)> = entries
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), e.path()))
        .collect();
    names.sort();
    for (name, dir) in names {
        let Some(spec) = RunSpec::parse(&name) else { continue };
        match read_log(&dir.join(LOG_FILE)) {
            Ok(rows) if !rows.is_empty() => groups
                .entry(spec.nodes)
                .or_default()
                .entry((spec.family, spec.regime))
                .or_default()
                .push((spec.seed, rows)),
            _ => report.missing.push(dir.join(LOG_FILE).display().to_string()),
        }
    }
    for (nodes, traces) in &groups {
        let series = traces
            .iter()
            .map(|((fam, reg), runs)| {
                let logs: Vec<Vec<LogRow>> = runs.iter().map(|(_, r)| r.clone()).collect();
                aggregate_seeds(&trace_label(*fam, *reg), &logs)
            })
            .collect::<Result<Vec<_>>>()?;
        let fig = training_curve_figure(&format!("Training on {nodes}-node networks"), &series);
        write_figure(&fig, out, &format!("training_{nodes}"), &mut report.written)?;
    }

    let cross = [runs.join(CROSS_EPISODES_FILE), runs.join("xeval").join(CROSS_EPISODES_FILE)]
        .into_iter()
        .find(|p| p.exists());
    match cross {
        Some(path) => {
            let cells = read_cross_size_episodes(&path)?;
            let mut eval_sizes: Vec<usize> = cells.iter().map(|((_, e), _)| *e).collect();
            eval_sizes.sort_unstable();
            eval_sizes.dedup();
            for k in eval_sizes {
                let boxes = cells
                    .iter()
                    .filter(|((_, e), _)| *e == k)
                    .map(|((t, _), r)| Ok((format!("trained on {t}"), summarize(r)?)))
                    .collect::<Result<Vec<_>>>()?;
                let fig = box_plot_figure(&format!("Evaluation on {k}-node networks"), &boxes);
                write_figure(&fig, out, &format!("boxplot_eval_{k}"), &mut report.written)?;
            }
        }
        None => report.missing.push(runs.join(CROSS_EPISODES_FILE).display().to_string()),
    }
    Ok(report)
}
