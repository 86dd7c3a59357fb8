use super::{dot, Objective};

#[derive(Debug, Clone, Copy)]
pub struct LineSearchOptions {
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    pub max_evals: usize,
    pub max_step: f64,
    /// Relative band within which function values are treated as noisy and
    /// the derivative-only (approximate Wolfe) decrease test is used.
    pub noise: f64,
}

impl Default for LineSearchOptions {
    fn default() -> Self {
        Self {
            c1: 1e-4,
            c2: 0.9,
            max_evals: 40,
            max_step: 1e10,
            noise: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LineSearchResult {
    pub step: f64,
    pub value: f64,
    pub x: Vec<f64>,
    pub grad: Vec<f64>,
    pub evals: usize,
}

struct Probe {
    step: f64,
    value: f64,
    slope: f64,
    x: Vec<f64>,
    grad: Vec<f64>,
}

struct Search<'a, O: Objective> {
    obj: &'a mut O,
    x0: &'a [f64],
    dir: &'a [f64],
    f0: f64,
    slope0: f64,
    opts: LineSearchOptions,
    evals: usize,
}

impl<O: Objective> Search<'_, O> {
    fn probe(&mut self, step: f64) -> Option<Probe> {
        self.evals += 1;
        let x: Vec<f64> = self
            .x0
            .iter()
            .zip(self.dir)
            .map(|(a, d)| a + step * d)
            .collect();
        let mut grad = vec![0.0; x.len()];
        let value = self.obj.eval(&x, &mut grad)?;
        if !value.is_finite() {
            return None;
        }
        let slope = dot(&grad, self.dir);
        Some(Probe {
            step,
            value,
            slope,
            x,
            grad,
        })
    }

    fn sufficient_decrease(&self, p: &Probe) -> bool {
        let o = &self.opts;
        if p.value <= self.f0 + o.c1 * p.step * self.slope0 {
            return true;
        }
        // function values are at rounding level: decide on the slope
        p.value <= self.f0 + self.band() && p.slope <= (2.0 * o.c1 - 1.0) * self.slope0
    }

    /// Absolute size of the rounding band around `f0`.
    fn band(&self) -> f64 {
        self.opts.noise * (1.0 + self.f0.abs())
    }

    fn curvature(&self, p: &Probe) -> bool {
        p.slope.abs() <= -self.opts.c2 * self.slope0
    }

    fn done(&self, p: Probe) -> LineSearchResult {
        LineSearchResult {
            step: p.step,
            value: p.value,
            x: p.x,
            grad: p.grad,
            evals: self.evals,
        }
    }

    /// `lo` satisfies sufficient decrease (or is the origin); the minimizer
    /// lies between `lo` and `hi`. `hi` carries a probe unless it was
    /// outside the domain.
    fn zoom(
        &mut self,
        mut lo: Option<Probe>,
        mut hi_step: f64,
        mut hi: Option<Probe>,
    ) -> Option<LineSearchResult> {
        loop {
            if self.evals >= self.opts.max_evals {
                return lo.map(|p| self.done(p));
            }
            let (lo_step, lo_value, lo_slope) = match &lo {
                Some(p) => (p.step, p.value, p.slope),
                None => (0.0, self.f0, self.slope0),
            };
            let width = hi_step - lo_step;
            if width.abs() <= f64::EPSILON * lo_step.abs().max(1e-300) {
                return lo.map(|p| self.done(p));
            }
            let trial = match &hi {
                Some(h) => cubic_min(lo_step, lo_value, lo_slope, h.step, h.value, h.slope),
                None => None,
            };
            let (a, b) = if lo_step < hi_step {
                (lo_step, hi_step)
            } else {
                (hi_step, lo_step)
            };
            let margin = 0.1 * (b - a);
            let step = match trial {
                Some(t) if t > a + margin && t < b - margin => t,
                _ => 0.5 * (lo_step + hi_step),
            };
            match self.probe(step) {
                None => {
                    hi_step = step;
                    hi = None;
                }
                Some(p) => {
                    if !self.sufficient_decrease(&p) || p.value > lo_value + self.band() {
                        hi_step = p.step;
                        hi = Some(p);
                    } else {
                        if self.curvature(&p) {
                            return Some(self.done(p));
                        }
                        if p.slope * (hi_step - lo_step) >= 0.0 {
                            hi_step = lo_step;
                            hi = lo.take();
                        }
                        lo = Some(p);
                    }
                }
            }
        }
    }
}

/// Minimizer of the cubic interpolating values and slopes at two steps.
fn cubic_min(a: f64, fa: f64, ga: f64, b: f64, fb: f64, gb: f64) -> Option<f64> {
    let d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - ga * gb;
    if disc < 0.0 {
        return None;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (gb + d2 - d1) / (gb - ga + 2.0 * d2);
    t.is_finite().then_some(t)
}

/// Finds a step along the descent direction `dir` from `x0` satisfying the
/// strong Wolfe conditions. `None` when no acceptable step was found.
pub fn strong_wolfe<O: Objective>(
    obj: &mut O,
    x0: &[f64],
    f0: f64,
    grad0: &[f64],
    dir: &[f64],
    initial_step: f64,
    opts: LineSearchOptions,
) -> Option<LineSearchResult> {
    let slope0 = dot(grad0, dir);
    if !(slope0 < 0.0) {
        return None;
    }
    let mut s = Search {
        obj,
        x0,
        dir,
        f0,
        slope0,
        opts,
        evals: 0,
    };
    let mut prev: Option<Probe> = None;
    let mut step = initial_step.min(opts.max_step);
    loop {
        if s.evals >= opts.max_evals {
            return prev.map(|p| s.done(p));
        }
        let Some(p) = s.probe(step) else {
            return s.zoom(prev, step, None);
        };
        let prev_value = prev.as_ref().map_or(f0, |q| q.value);
        if !s.sufficient_decrease(&p) || (prev.is_some() && p.value > prev_value + s.band()) {
            return s.zoom(prev, p.step, Some(p));
        }
        if s.curvature(&p) {
            return Some(s.done(p));
        }
        if p.slope >= 0.0 {
            let hi_step = prev.as_ref().map_or(0.0, |q| q.step);
            return s.zoom(Some(p), hi_step, prev);
        }
        step = (2.0 * p.step).min(opts.max_step);
        if p.step >= opts.max_step {
            return Some(s.done(p));
        }
        prev = Some(p);
    }
}
