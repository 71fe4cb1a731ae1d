//! Integration of the first-order system equivalent to `(tau - z) f = g`.
//!
//! The unknowns are the pair `(f, f^[1])` with `f^[1] = p [f' + s f]` the
//! first quasi-derivative; both components are continuous across coefficient
//! breakpoints even when `s` jumps, which is what makes step potentials
//! integrable here. The system reads
//!
//! ```text
//! (f, f^[1])' = [ -s    1/p ] (f, f^[1])  -  (0, r g)
//!               [ q-zr   s  ]
//! ```
//!
//! Precision-critical quadratures along solutions (norms, kernels, spectral
//! transforms) are computed by augmenting this system with accumulator
//! components instead of post-hoc quadrature over dense output, so they
//! inherit the integrator's error control.

use crate::coefficients::{CoefficientSet, EnergyPoint};
use crate::error::{Error, Result};
use crate::ode::{self, OdeOptions, OdeSolution, OdeSystem};
use num_complex::Complex64;

/// State `(f, f^[1])` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiState {
    pub x: f64,
    pub f: Complex64,
    pub f_quasi: Complex64,
}

impl QuasiState {
    pub fn new(x: f64, f: Complex64, f_quasi: Complex64) -> Self {
        QuasiState { x, f, f_quasi }
    }

    pub fn real(x: f64, f: f64, f_quasi: f64) -> Self {
        QuasiState {
            x,
            f: Complex64::new(f, 0.0),
            f_quasi: Complex64::new(f_quasi, 0.0),
        }
    }
}

/// Modified Wronskian `W(u, v) = u v^[1] - u^[1] v` of two states at the
/// same position.
pub fn wronskian(u: &QuasiState, v: &QuasiState) -> Result<Complex64> {
    if (u.x - v.x).abs() > 1e-12 * (1.0 + u.x.abs()) {
        return Err(Error::InvalidInput(format!(
            "wronskian position mismatch: {} vs {}",
            u.x, v.x
        )));
    }
    Ok(u.f * v.f_quasi - u.f_quasi * v.f)
}

/// Solution of the quasi-derivative system at a fixed energy, with dense
/// output along the traversed range.
#[derive(Debug, Clone)]
pub struct SolutionTrace {
    pub energy: EnergyPoint,
    sol: OdeSolution,
    has_forcing: bool,
}

impl SolutionTrace {
    pub fn x_start(&self) -> f64 {
        self.sol.x_start
    }

    pub fn x_end(&self) -> f64 {
        self.sol.x_end
    }

    pub fn covers(&self, x: f64) -> bool {
        self.sol.covers(x)
    }

    pub fn eval(&self, x: f64) -> QuasiState {
        let v = self.sol.eval(x);
        QuasiState {
            x,
            f: v[0],
            f_quasi: v[1],
        }
    }

    pub fn initial(&self) -> QuasiState {
        QuasiState {
            x: self.sol.x_start,
            f: self.sol.y_start[0],
            f_quasi: self.sol.y_start[1],
        }
    }

    pub fn last(&self) -> QuasiState {
        QuasiState {
            x: self.sol.x_end,
            f: self.sol.y_end[0],
            f_quasi: self.sol.y_end[1],
        }
    }

    /// States at the accepted step endpoints, in traversal order.
    pub fn samples(&self) -> Vec<QuasiState> {
        let mut out = vec![self.initial()];
        for step in &self.sol.steps {
            let x = step.x0 + step.h;
            out.push(self.eval(x));
        }
        out
    }

    pub fn error_estimate(&self) -> f64 {
        self.sol.error_estimate
    }

    pub fn has_forcing(&self) -> bool {
        self.has_forcing
    }

    /// CSV dump `(x, Re f, Im f, Re f^[1], Im f^[1])` at the accepted step
    /// endpoints.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,re_f,im_f,re_f_quasi,im_f_quasi\n");
        for st in self.samples() {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                st.x, st.f.re, st.f.im, st.f_quasi.re, st.f_quasi.im
            ));
        }
        out
    }

    /// Classical derivative `f' = f^[1]/p - s f`, taking coefficient values
    /// from the right (`side > 0`) or left (`side < 0`) at breakpoints.
    pub fn classical_derivative(&self, c: &CoefficientSet, x: f64, side: i8) -> Complex64 {
        let st = self.eval(x);
        let (p, s) = if side < 0 {
            (c.p().eval_left(x), c.s().eval_left(x))
        } else {
            (c.p().eval(x), c.s().eval(x))
        };
        st.f_quasi / p - s * st.f
    }
}

struct QuasiSystem<'a> {
    c: &'a CoefficientSet,
    z: Complex64,
    forcing: Option<&'a dyn Fn(f64) -> Complex64>,
    piece: usize,
}

impl QuasiSystem<'_> {
    fn coeffs(&self, x: f64) -> (f64, f64, f64, f64) {
        let i = self.piece;
        (
            self.c.p().eval_piece(i, x),
            self.c.q().eval_piece(i, x),
            self.c.r().eval_piece(i, x),
            self.c.s().eval_piece(i, x),
        )
    }
}

impl OdeSystem for QuasiSystem<'_> {
    fn dim(&self) -> usize {
        2
    }

    fn enter_segment(&mut self, lo: f64, hi: f64) {
        self.piece = self.c.p().piece_index(0.5 * (lo + hi));
    }

    fn eval(&mut self, x: f64, y: &[Complex64], dy: &mut [Complex64]) {
        let (p, q, r, s) = self.coeffs(x);
        dy[0] = -s * y[0] + y[1] / p;
        dy[1] = (q - self.z * r) * y[0] + s * y[1];
        if let Some(g) = self.forcing {
            dy[1] -= r * g(x);
        }
    }
}

fn step_cap(z: &EnergyPoint, opts: &OdeOptions) -> f64 {
    let w = z.sqrt_minus_z.norm();
    if w > 1.0 {
        opts.max_step.min(0.5 / w)
    } else {
        opts.max_step
    }
}

/// Integrate `(tau - z) f = g` from `init` at `x0` to `x1`, splitting at all
/// coefficient breakpoints (plus `extra_cuts`, e.g. kinks of the forcing).
pub fn integrate_with(
    c: &CoefficientSet,
    z: EnergyPoint,
    init: &QuasiState,
    x1: f64,
    forcing: Option<&dyn Fn(f64) -> Complex64>,
    extra_cuts: &[f64],
    opts: &OdeOptions,
) -> Result<SolutionTrace> {
    let x0 = init.x;
    if x0 < c.a() - 1e-12 || x0 > c.b() + 1e-12 || x1 < c.a() - 1e-12 || x1 > c.b() + 1e-12 {
        return Err(Error::InvalidInput(format!(
            "integration range [{x0}, {x1}] outside coefficient interval"
        )));
    }
    let mut cuts: Vec<f64> = c.breakpoints().to_vec();
    cuts.extend_from_slice(extra_cuts);
    let mut sys = QuasiSystem {
        c,
        z: z.z,
        forcing,
        piece: 0,
    };
    let local_opts = OdeOptions {
        max_step: step_cap(&z, opts),
        ..*opts
    };
    let y0 = [init.f, init.f_quasi];
    let sol = ode::integrate(&mut sys, x0, x1, &y0, &cuts, &local_opts)?;
    Ok(SolutionTrace {
        energy: z,
        sol,
        has_forcing: forcing.is_some(),
    })
}

/// Homogeneous integration `(tau - z) f = 0`.
pub fn integrate(
    c: &CoefficientSet,
    z: EnergyPoint,
    init: &QuasiState,
    x1: f64,
    opts: &OdeOptions,
) -> Result<SolutionTrace> {
    integrate_with(c, z, init, x1, None, &[], opts)
}

/// Co-integrate two homogeneous solutions `u` (at `z1`) and `v` (at `z2`)
/// from their states at `x0` to `x1`, accumulating `∫ u v r dx` (bilinear, no
/// conjugation) as an extra component. Returns the endpoint states and the
/// integral.
pub fn pair_product_integral(
    c: &CoefficientSet,
    z1: EnergyPoint,
    z2: EnergyPoint,
    u0: &QuasiState,
    v0: &QuasiState,
    x1: f64,
    opts: &OdeOptions,
) -> Result<(QuasiState, QuasiState, Complex64)> {
    if (u0.x - v0.x).abs() > 1e-12 {
        return Err(Error::InvalidInput(
            "pair integration requires matching start positions".into(),
        ));
    }
    struct PairSystem<'a> {
        c: &'a CoefficientSet,
        z1: Complex64,
        z2: Complex64,
        piece: usize,
    }
    impl OdeSystem for PairSystem<'_> {
        fn dim(&self) -> usize {
            5
        }
        fn enter_segment(&mut self, lo: f64, hi: f64) {
            self.piece = self.c.p().piece_index(0.5 * (lo + hi));
        }
        fn eval(&mut self, x: f64, y: &[Complex64], dy: &mut [Complex64]) {
            let i = self.piece;
            let p = self.c.p().eval_piece(i, x);
            let q = self.c.q().eval_piece(i, x);
            let r = self.c.r().eval_piece(i, x);
            let s = self.c.s().eval_piece(i, x);
            dy[0] = -s * y[0] + y[1] / p;
            dy[1] = (q - self.z1 * r) * y[0] + s * y[1];
            dy[2] = -s * y[2] + y[3] / p;
            dy[3] = (q - self.z2 * r) * y[2] + s * y[3];
            dy[4] = y[0] * y[2] * r;
        }
    }
    let mut sys = PairSystem {
        c,
        z1: z1.z,
        z2: z2.z,
        piece: 0,
    };
    let cap1 = step_cap(&z1, opts);
    let cap2 = step_cap(&z2, opts);
    let local_opts = OdeOptions {
        max_step: cap1.min(cap2),
        ..*opts
    };
    let y0 = [u0.f, u0.f_quasi, v0.f, v0.f_quasi, Complex64::new(0.0, 0.0)];
    let sol = ode::integrate(&mut sys, u0.x, x1, &y0, c.breakpoints(), &local_opts)?;
    let u1 = QuasiState::new(x1, sol.y_end[0], sol.y_end[1]);
    let v1 = QuasiState::new(x1, sol.y_end[2], sol.y_end[3]);
    Ok((u1, v1, sol.y_end[4]))
}

/// Co-integrate one homogeneous solution while accumulating
/// `∫ f(x) w(x) r(x) dx` for a supplied weight `w`.
pub fn weighted_integral(
    c: &CoefficientSet,
    z: EnergyPoint,
    init: &QuasiState,
    x1: f64,
    weight: &dyn Fn(f64) -> f64,
    weight_cuts: &[f64],
    opts: &OdeOptions,
) -> Result<(QuasiState, Complex64)> {
    struct WeightedSystem<'a> {
        c: &'a CoefficientSet,
        z: Complex64,
        weight: &'a dyn Fn(f64) -> f64,
        piece: usize,
    }
    impl OdeSystem for WeightedSystem<'_> {
        fn dim(&self) -> usize {
            3
        }
        fn enter_segment(&mut self, lo: f64, hi: f64) {
            self.piece = self.c.p().piece_index(0.5 * (lo + hi));
        }
        fn eval(&mut self, x: f64, y: &[Complex64], dy: &mut [Complex64]) {
            let i = self.piece;
            let p = self.c.p().eval_piece(i, x);
            let q = self.c.q().eval_piece(i, x);
            let r = self.c.r().eval_piece(i, x);
            let s = self.c.s().eval_piece(i, x);
            dy[0] = -s * y[0] + y[1] / p;
            dy[1] = (q - self.z * r) * y[0] + s * y[1];
            dy[2] = y[0] * ((self.weight)(x) * r);
        }
    }
    let mut sys = WeightedSystem {
        c,
        z: z.z,
        weight,
        piece: 0,
    };
    let mut cuts = c.breakpoints().to_vec();
    cuts.extend_from_slice(weight_cuts);
    let local_opts = OdeOptions {
        max_step: step_cap(&z, opts),
        ..*opts
    };
    let y0 = [init.f, init.f_quasi, Complex64::new(0.0, 0.0)];
    let sol = ode::integrate(&mut sys, init.x, x1, &y0, &cuts, &local_opts)?;
    Ok((
        QuasiState::new(x1, sol.y_end[0], sol.y_end[1]),
        sol.y_end[2],
    ))
}

/// Residual of the Lagrange identity over `[alpha, beta]` for two
/// homogeneous traces `u` (energy `z1`) and `v` (energy `z2`):
///
/// `| ∫ (v tau u - u tau v) r dx - [W(u,v)(beta) - W(u,v)(alpha)] |`
///
/// where the integral reduces to `(z1 - z2) ∫ u v r dx` on solutions.
pub fn lagrange_defect(
    c: &CoefficientSet,
    u: &SolutionTrace,
    v: &SolutionTrace,
    alpha: f64,
    beta: f64,
    opts: &OdeOptions,
) -> Result<f64> {
    if u.has_forcing() || v.has_forcing() {
        return Err(Error::InvalidInput(
            "lagrange defect requires homogeneous traces".into(),
        ));
    }
    if alpha.partial_cmp(&beta) != Some(std::cmp::Ordering::Less) {
        return Err(Error::InvalidInput("need alpha < beta".into()));
    }
    for t in [u, v] {
        if !(t.covers(alpha) && t.covers(beta)) {
            return Err(Error::InvalidInput(format!(
                "trace does not cover [{alpha}, {beta}]"
            )));
        }
    }
    let u0 = u.eval(alpha);
    let v0 = v.eval(alpha);
    let (u1, v1, integral) = pair_product_integral(c, u.energy, v.energy, &u0, &v0, beta, opts)?;
    let w_beta = wronskian(&u1, &v1)?;
    let w_alpha = wronskian(&u0, &v0)?;
    let lhs = (u.energy.z - v.energy.z) * integral;
    Ok((lhs - (w_beta - w_alpha)).norm())
}
