//! Central finite-difference gradient verification.

use super::params::ParamStore;
use super::tensor::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckEntry {
    pub param: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

impl GradCheckEntry {
    pub fn relative_error(&self) -> f64 {
        let denom = self.analytic.abs().max(self.numeric.abs());
        if denom == 0.0 {
            0.0
        } else {
            (self.analytic - self.numeric).abs() / denom
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct GradCheckReport {
    pub entries: Vec<GradCheckEntry>,
}

impl GradCheckReport {
    /// Largest relative error over entries whose analytic magnitude exceeds `floor`.
    pub fn max_relative_error(&self, floor: f64) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.analytic.abs() > floor || e.numeric.abs() > floor)
            .map(GradCheckEntry::relative_error)
            .fold(0.0, f64::max)
    }

    pub fn worst(&self, floor: f64) -> Option<&GradCheckEntry> {
        self.entries
            .iter()
            .filter(|e| e.analytic.abs() > floor || e.numeric.abs() > floor)
            .max_by(|a, b| a.relative_error().total_cmp(&b.relative_error()))
    }
}

/// Compares the gradients currently stored in `store` against central
/// differences of `loss` with step `h`, for every trainable element.
pub fn finite_difference<T: Real>(
    store: &mut ParamStore<T>,
    h: f64,
    mut loss: impl FnMut(&ParamStore<T>) -> f64,
) -> GradCheckReport {
    let mut entries = Vec::new();
    let ids: Vec<_> = store.ids().collect();
    for id in ids {
        if !store.get(id).trainable {
            continue;
        }
        for index in 0..store.get(id).value.len() {
            let orig = store.get(id).value.data()[index];
            store.get_mut(id).value.data_mut()[index] = T::of(orig.f64() + h);
            let up = loss(store);
            store.get_mut(id).value.data_mut()[index] = T::of(orig.f64() - h);
            let down = loss(store);
            store.get_mut(id).value.data_mut()[index] = orig;
            let p = store.get(id);
            entries.push(GradCheckEntry {
                param: p.name.clone(),
                index,
                analytic: p.gradient.data()[index].f64(),
                numeric: (up - down) / (2.0 * h),
            });
        }
    }
    GradCheckReport { entries }
}
