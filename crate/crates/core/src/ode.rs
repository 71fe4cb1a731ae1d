//! Adaptive embedded Runge-Kutta (Dormand-Prince 5(4)) for complex linear
//! systems, with dense output and mandatory splitting at supplied cut points.
//!
//! The driver integrates segment by segment between cuts, so right-hand
//! sides only ever see one smooth piece at a time; the state itself stays
//! continuous across cuts. Works in either direction (`x1 < x0` integrates
//! backward with negative steps).

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Right-hand side of a first-order system, smooth on each segment.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    /// Called when the driver moves to a new smooth segment `[lo, hi]`
    /// (or `[hi, lo]` when integrating backward).
    fn enter_segment(&mut self, _lo: f64, _hi: f64) {}
    fn eval(&mut self, x: f64, y: &[Complex64], dy: &mut [Complex64]);
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Hard cap on the step magnitude (resolves `exp(sqrt(-z) x)` scales).
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: f64::INFINITY,
            max_steps: 2_000_000,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(rel: f64, abs: f64) -> Self {
        OdeOptions {
            rel_tol: rel,
            abs_tol: abs,
            ..Default::default()
        }
    }
}

/// One accepted step with its dense-output coefficients (5 blocks of `dim`).
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub x0: f64,
    pub h: f64,
    cont: Vec<Complex64>,
}

impl StepRecord {
    /// Quartic dense-output evaluation at `x` inside the step.
    pub fn eval_into(&self, dim: usize, x: f64, out: &mut [Complex64]) {
        let theta = (x - self.x0) / self.h;
        let theta1 = 1.0 - theta;
        for i in 0..dim {
            let c0 = self.cont[i];
            let c1 = self.cont[dim + i];
            let c2 = self.cont[2 * dim + i];
            let c3 = self.cont[3 * dim + i];
            let c4 = self.cont[4 * dim + i];
            out[i] = c0 + theta * (c1 + theta1 * (c2 + theta * (c3 + theta1 * c4)));
        }
    }
}

/// The full solution path with dense output.
#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub dim: usize,
    pub x_start: f64,
    pub x_end: f64,
    pub y_start: Vec<Complex64>,
    pub y_end: Vec<Complex64>,
    pub steps: Vec<StepRecord>,
    /// Accumulated local error proxy in the state norm.
    pub error_estimate: f64,
    pub n_accepted: usize,
    pub n_rejected: usize,
}

impl OdeSolution {
    pub fn forward(&self) -> bool {
        self.x_end >= self.x_start
    }

    pub fn covers(&self, x: f64) -> bool {
        let (lo, hi) = if self.forward() {
            (self.x_start, self.x_end)
        } else {
            (self.x_end, self.x_start)
        };
        x >= lo - 1e-12 && x <= hi + 1e-12
    }

    pub fn eval_into(&self, x: f64, out: &mut [Complex64]) {
        debug_assert!(self.covers(x));
        if self.steps.is_empty() {
            out.copy_from_slice(&self.y_end);
            return;
        }
        // Steps are stored in traversal order; locate the step containing x.
        let fwd = self.forward();
        let pos = self
            .steps
            .partition_point(|s| if fwd { s.x0 + s.h < x } else { s.x0 + s.h > x });
        let idx = pos.min(self.steps.len() - 1);
        self.steps[idx].eval_into(self.dim, x, out);
    }

    pub fn eval(&self, x: f64) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim];
        self.eval_into(x, &mut out);
        out
    }
}

// Dormand-Prince 5(4) coefficients.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Dense-output weights.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

struct Workspace {
    k: [Vec<Complex64>; 7],
    y_stage: Vec<Complex64>,
    y_new: Vec<Complex64>,
}

impl Workspace {
    fn new(dim: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); dim];
        Workspace {
            k: [
                z.clone(),
                z.clone(),
                z.clone(),
                z.clone(),
                z.clone(),
                z.clone(),
                z.clone(),
            ],
            y_stage: z.clone(),
            y_new: z,
        }
    }
}

/// Integrate from `x0` to `x1` (either direction), splitting at every cut in
/// `cuts` strictly between them. `y0` is the state at `x0`.
pub fn integrate(
    system: &mut dyn OdeSystem,
    x0: f64,
    x1: f64,
    y0: &[Complex64],
    cuts: &[f64],
    opts: &OdeOptions,
) -> Result<OdeSolution> {
    let dim = system.dim();
    assert_eq!(y0.len(), dim);
    if !x0.is_finite() || !x1.is_finite() {
        return Err(Error::InvalidInput("non-finite integration bounds".into()));
    }
    let mut sol = OdeSolution {
        dim,
        x_start: x0,
        x_end: x0,
        y_start: y0.to_vec(),
        y_end: y0.to_vec(),
        steps: Vec::new(),
        error_estimate: 0.0,
        n_accepted: 0,
        n_rejected: 0,
    };
    if x0 == x1 {
        return Ok(sol);
    }
    let fwd = x1 > x0;
    let mut edges: Vec<f64> = cuts
        .iter()
        .copied()
        .filter(|&c| {
            if fwd {
                c > x0 && c < x1
            } else {
                c < x0 && c > x1
            }
        })
        .collect();
    edges.sort_by(|u, v| {
        if fwd {
            u.partial_cmp(v).unwrap()
        } else {
            v.partial_cmp(u).unwrap()
        }
    });
    edges.dedup_by(|u, v| (*u - *v).abs() < 1e-14);
    edges.push(x1);

    let mut ws = Workspace::new(dim);
    let mut y = y0.to_vec();
    let mut x = x0;
    let mut total_steps = 0usize;
    for &edge in &edges {
        system.enter_segment(x, edge);
        integrate_segment(
            system,
            &mut x,
            edge,
            &mut y,
            &mut ws,
            opts,
            &mut sol,
            &mut total_steps,
        )?;
    }
    sol.x_end = x;
    sol.y_end = y;
    Ok(sol)
}

#[allow(clippy::too_many_arguments)]
fn integrate_segment(
    system: &mut dyn OdeSystem,
    x: &mut f64,
    x_end: f64,
    y: &mut Vec<Complex64>,
    ws: &mut Workspace,
    opts: &OdeOptions,
    sol: &mut OdeSolution,
    total_steps: &mut usize,
) -> Result<()> {
    let dim = system.dim();
    let dir = if x_end > *x { 1.0 } else { -1.0 };
    let seg_len = (x_end - *x).abs();
    if seg_len == 0.0 {
        return Ok(());
    }

    // initial step heuristic
    system.eval(*x, y, &mut ws.k[0]);
    let ynorm = norm_inf(y);
    let fnorm = norm_inf(&ws.k[0]);
    let mut h = dir
        * (0.1 * (ynorm + opts.abs_tol) / (fnorm + 1e-30))
            .min(0.1 * seg_len)
            .min(opts.max_step)
            .max(1e-10 * seg_len.max(1.0));

    loop {
        if (*x - x_end) * dir >= 0.0 {
            return Ok(());
        }
        *total_steps += 1;
        if *total_steps > opts.max_steps {
            return Err(Error::Integration {
                position: *x,
                reason: "step budget exhausted".into(),
            });
        }
        // clamp to segment end and step cap
        if (h.abs()) > (x_end - *x).abs() {
            h = x_end - *x;
        }
        if h.abs() > opts.max_step {
            h = dir * opts.max_step;
        }
        if h.abs() < 1e-14 * (x.abs().max(1.0)) {
            return Err(Error::Integration {
                position: *x,
                reason: "step size underflow".into(),
            });
        }

        // stages (k1 already current)
        stage(system, ws, *x, y, h, &[(A21, 0)], C2, 1);
        stage(system, ws, *x, y, h, &[(A31, 0), (A32, 1)], C3, 2);
        stage(system, ws, *x, y, h, &[(A41, 0), (A42, 1), (A43, 2)], C4, 3);
        stage(
            system,
            ws,
            *x,
            y,
            h,
            &[(A51, 0), (A52, 1), (A53, 2), (A54, 3)],
            C5,
            4,
        );
        stage(
            system,
            ws,
            *x,
            y,
            h,
            &[(A61, 0), (A62, 1), (A63, 2), (A64, 3), (A65, 4)],
            1.0,
            5,
        );
        // 5th-order solution
        for i in 0..dim {
            ws.y_new[i] = y[i]
                + h * (B1 * ws.k[0][i]
                    + B3 * ws.k[2][i]
                    + B4 * ws.k[3][i]
                    + B5 * ws.k[4][i]
                    + B6 * ws.k[5][i]);
        }
        let x_new = *x + h;
        {
            let (k7, rest) = ws.k.split_last_mut().unwrap();
            let _ = rest;
            system.eval(x_new, &ws.y_new, k7);
        }

        // embedded error
        let mut err_sq = 0.0;
        for i in 0..dim {
            let e = h
                * (E1 * ws.k[0][i]
                    + E3 * ws.k[2][i]
                    + E4 * ws.k[3][i]
                    + E5 * ws.k[4][i]
                    + E6 * ws.k[5][i]
                    + E7 * ws.k[6][i]);
            let scale = opts.abs_tol + opts.rel_tol * ws.y_new[i].norm().max(y[i].norm());
            let ratio = e.norm() / scale;
            err_sq += ratio * ratio;
        }
        let err = (err_sq / dim as f64).sqrt();

        if err <= 1.0 {
            // dense output coefficients
            let mut cont = vec![Complex64::new(0.0, 0.0); 5 * dim];
            for i in 0..dim {
                let ydiff = ws.y_new[i] - y[i];
                let bspl = h * ws.k[0][i] - ydiff;
                cont[i] = y[i];
                cont[dim + i] = ydiff;
                cont[2 * dim + i] = bspl;
                cont[3 * dim + i] = ydiff - h * ws.k[6][i] - bspl;
                cont[4 * dim + i] = h
                    * (D1 * ws.k[0][i]
                        + D3 * ws.k[2][i]
                        + D4 * ws.k[3][i]
                        + D5 * ws.k[4][i]
                        + D6 * ws.k[5][i]
                        + D7 * ws.k[6][i]);
            }
            sol.steps.push(StepRecord { x0: *x, h, cont });
            sol.n_accepted += 1;
            let local_scale = opts.abs_tol + opts.rel_tol * norm_inf(&ws.y_new);
            sol.error_estimate += err * local_scale;
            *x = x_new;
            std::mem::swap(y, &mut ws.y_new);
            ws.k.swap(0, 6); // FSAL
        } else {
            sol.n_rejected += 1;
        }
        let factor = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
        h *= factor;
    }
}

#[allow(clippy::too_many_arguments)]
fn stage(
    system: &mut dyn OdeSystem,
    ws: &mut Workspace,
    x: f64,
    y: &[Complex64],
    h: f64,
    weights: &[(f64, usize)],
    c: f64,
    out_k: usize,
) {
    let dim = y.len();
    for i in 0..dim {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(w, j) in weights {
            acc += w * ws.k[j][i];
        }
        ws.y_stage[i] = y[i] + h * acc;
    }
    let (head, tail) = ws.k.split_at_mut(out_k);
    let _ = head;
    system.eval(x + c * h, &ws.y_stage, &mut tail[0]);
}

fn norm_inf(v: &[Complex64]) -> f64 {
    v.iter().fold(0.0, |m, c| m.max(c.norm()))
}

/// Adapter for closure right-hand sides without segment state.
pub struct ClosureSystem<F> {
    dim: usize,
    f: F,
}

impl<F: FnMut(f64, &[Complex64], &mut [Complex64])> ClosureSystem<F> {
    pub fn new(dim: usize, f: F) -> Self {
        ClosureSystem { dim, f }
    }
}

impl<F: FnMut(f64, &[Complex64], &mut [Complex64])> OdeSystem for ClosureSystem<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&mut self, x: f64, y: &[Complex64], dy: &mut [Complex64]) {
        (self.f)(x, y, dy)
    }
}
