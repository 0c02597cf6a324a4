//! Minimal vector figure rendered to SVG text or an RGB raster. The raster
//! omits text.

use std::fmt::Write as _;

use image::{Rgb, RgbImage};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Color(pub u8, pub u8, pub u8);

impl Color {
    pub const BLACK: Color = Color(0, 0, 0);
    pub const GREY: Color = Color(200, 200, 200);
    pub const WHITE: Color = Color(255, 255, 255);

    fn hex(self) -> String {
        format!("#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Anchor {
    Start,
    Middle,
    End,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Mark {
    Line { points: Vec<(f64, f64)>, color: Color, width: f64 },
    Polygon { points: Vec<(f64, f64)>, color: Color, opacity: f64 },
    Rect { x: f64, y: f64, w: f64, h: f64, fill: Option<Color>, stroke: Color },
    Text { x: f64, y: f64, text: String, size: f64, anchor: Anchor },
}

/// Marks in pixel coordinates, origin top-left.
#[derive(Debug, Clone, PartialEq)]
pub struct Canvas {
    pub width: u32,
    pub height: u32,
    pub marks: Vec<Mark>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Canvas {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            marks: Vec::new(),
        }
    }

    pub fn push(&mut self, m: Mark) {
        self.marks.push(m);
    }

    pub fn to_svg(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
            w = self.width,
            h = self.height
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let pts = |p: &[(f64, f64)]| p.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect::<Vec<_>>().join(" ");
        for m in &self.marks {
            let _ = match m {
                Mark::Line { points, color, width } => writeln!(
                    s,
                    r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="{width}"/>"#,
                    pts(points),
                    color.hex()
                ),
                Mark::Polygon { points, color, opacity } => writeln!(
                    s,
                    r#"<polygon points="{}" fill="{}" fill-opacity="{opacity}" stroke="none"/>"#,
                    pts(points),
                    color.hex()
                ),
                Mark::Rect { x, y, w, h, fill, stroke } => writeln!(
                    s,
                    r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{}" stroke="{}"/>"#,
                    fill.map_or("none".to_string(), Color::hex),
                    stroke.hex()
                ),
                Mark::Text { x, y, text, size, anchor } => writeln!(
                    s,
                    r#"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="{size}" text-anchor="{}">{}</text>"#,
                    match anchor {
                        Anchor::Start => "start",
                        Anchor::Middle => "middle",
                        Anchor::End => "end",
                    },
                    escape(text)
                ),
            };
        }
        s.push_str("</svg>\n");
        s
    }

    pub fn to_image(&self) -> RgbImage {
        let mut img = RgbImage::from_pixel(self.width, self.height, Rgb([255, 255, 255]));
        for m in &self.marks {
            match m {
                Mark::Polygon { points, color, opacity } => fill_polygon(&mut img, points, *color, *opacity),
                Mark::Line { points, color, width } => {
                    for w in points.windows(2) {
                        draw_segment(&mut img, w[0], w[1], *color, *width);
                    }
                }
                Mark::Rect { x, y, w, h, fill, stroke } => {
                    let corners = [(*x, *y), (x + w, *y), (x + w, y + h), (*x, y + h)];
                    if let Some(f) = fill {
                        fill_polygon(&mut img, &corners, *f, 1.0);
                    }
                    for i in 0..4 {
                        draw_segment(&mut img, corners[i], corners[(i + 1) % 4], *stroke, 1.0);
                    }
                }
                Mark::Text { .. } => {}
            }
        }
        img
    }
}

fn blend(img: &mut RgbImage, x: i64, y: i64, c: Color, alpha: f64) {
    if x < 0 || y < 0 || x >= img.width() as i64 || y >= img.height() as i64 {
        return;
    }
    let p = img.get_pixel_mut(x as u32, y as u32);
    for (ch, v) in p.0.iter_mut().zip([c.0, c.1, c.2]) {
        *ch = (*ch as f64 * (1.0 - alpha) + v as f64 * alpha).round() as u8;
    }
}

fn draw_segment(img: &mut RgbImage, a: (f64, f64), b: (f64, f64), c: Color, width: f64) {
    let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
    let steps = (len * 2.0).ceil().max(1.0) as usize;
    let r = (width / 2.0).max(0.5);
    let ri = r.ceil() as i64;
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        let (x, y) = (a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t);
        for dy in -ri..=ri {
            for dx in -ri..=ri {
                if ((dx * dx + dy * dy) as f64) <= r * r {
                    let (px, py) = (x.round() as i64 + dx, y.round() as i64 + dy);
                    if px >= 0 && py >= 0 && px < img.width() as i64 && py < img.height() as i64 {
                        img.put_pixel(px as u32, py as u32, Rgb([c.0, c.1, c.2]));
                    }
                }
            }
        }
    }
}

/// Even-odd scanline fill sampled at pixel centres.
fn fill_polygon(img: &mut RgbImage, pts: &[(f64, f64)], c: Color, alpha: f64) {
    if pts.len() < 3 {
        return;
    }
    let (ymin, ymax) = pts.iter().fold((f64::MAX, f64::MIN), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)));
    let (y0, y1) = (ymin.floor().max(0.0) as i64, ymax.ceil().min(img.height() as f64) as i64);
    let mut xs = Vec::new();
    for y in y0..y1 {
        let yc = y as f64 + 0.5;
        xs.clear();
        for i in 0..pts.len() {
            let (a, b) = (pts[i], pts[(i + 1) % pts.len()]);
            if (a.1 <= yc) != (b.1 <= yc) {
                xs.push(a.0 + (yc - a.1) / (b.1 - a.1) * (b.0 - a.0));
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks(2) {
            if let [l, r] = pair {
                for x in (l - 0.5).ceil() as i64..=(r - 0.5).floor() as i64 {
                    blend(img, x, y, c, alpha);
                }
            }
        }
    }
}
