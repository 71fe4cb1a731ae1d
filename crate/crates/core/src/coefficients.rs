//! The coefficient quadruple `(p, q, r, s)` on a finite interval.
//!
//! Coefficients are piecewise polynomials: breakpoints carry all the
//! roughness (steps in `s` produce delta terms in the formal potential
//! `-(sp)' + s^2 p + q`), while each piece is smooth. This keeps the class
//! closed under the gauge and Liouville transforms and lets the integrator
//! split exactly at the discontinuities.
//!
//! Values at breakpoints follow the right-limit convention; the right
//! endpoint of the interval takes its value from the last piece.

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::quad;
use num_complex::Complex64;

/// Piecewise polynomial on `[a, b]`. Pieces are expressed in the local
/// variable `t = x - left_breakpoint` of their subinterval.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseCoefficient {
    breakpoints: Vec<f64>,
    pieces: Vec<Polynomial>,
}

impl PiecewiseCoefficient {
    pub fn new(breakpoints: Vec<f64>, pieces: Vec<Polynomial>) -> Result<Self> {
        if breakpoints.len() < 2 || pieces.len() + 1 != breakpoints.len() {
            return Err(Error::InvalidInput(format!(
                "need n+1 breakpoints for n pieces, got {} and {}",
                breakpoints.len(),
                pieces.len()
            )));
        }
        // partial_cmp also rejects NaN breakpoints
        if breakpoints
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
        {
            return Err(Error::InvalidInput(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if breakpoints.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("breakpoints must be finite".into()));
        }
        Ok(PiecewiseCoefficient {
            breakpoints,
            pieces,
        })
    }

    pub fn constant(a: f64, b: f64, value: f64) -> Self {
        PiecewiseCoefficient::new(vec![a, b], vec![Polynomial::constant(value)]).unwrap()
    }

    /// Build from polynomials given in the global variable `x`.
    pub fn from_global(breakpoints: Vec<f64>, global_pieces: Vec<Polynomial>) -> Result<Self> {
        let local = global_pieces
            .iter()
            .zip(breakpoints.iter())
            .map(|(p, &left)| p.compose_affine(1.0, left))
            .collect();
        PiecewiseCoefficient::new(breakpoints, local)
    }

    /// Step function: `lo_value` on `[a, x0)`, `hi_value` on `[x0, b]`.
    pub fn step(a: f64, x0: f64, b: f64, lo_value: f64, hi_value: f64) -> Self {
        PiecewiseCoefficient::new(
            vec![a, x0, b],
            vec![
                Polynomial::constant(lo_value),
                Polynomial::constant(hi_value),
            ],
        )
        .unwrap()
    }

    pub fn a(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn b(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn num_pieces(&self) -> usize {
        self.pieces.len()
    }

    pub fn piece(&self, i: usize) -> &Polynomial {
        &self.pieces[i]
    }

    pub fn piece_left(&self, i: usize) -> f64 {
        self.breakpoints[i]
    }

    /// Index of the piece owning `x` under the right-limit convention.
    pub fn piece_index(&self, x: f64) -> usize {
        match self
            .breakpoints
            .binary_search_by(|bp| bp.partial_cmp(&x).unwrap())
        {
            Ok(i) => i.min(self.pieces.len() - 1),
            Err(i) => i.saturating_sub(1).min(self.pieces.len() - 1),
        }
    }

    pub fn eval_piece(&self, i: usize, x: f64) -> f64 {
        self.pieces[i].eval(x - self.breakpoints[i])
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_piece(self.piece_index(x), x)
    }

    /// Left-limit value at `x` (differs from `eval` only at breakpoints).
    pub fn eval_left(&self, x: f64) -> f64 {
        let i = self.piece_index(x);
        if i > 0 && x == self.breakpoints[i] {
            self.eval_piece(i - 1, x)
        } else {
            self.eval_piece(i, x)
        }
    }

    /// Jump `f(x+) - f(x-)` at an interior point.
    pub fn jump_at(&self, x: f64) -> f64 {
        self.eval(x) - self.eval_left(x)
    }

    /// Piecewise derivative (distributional jump terms are not represented).
    pub fn derivative(&self) -> Self {
        PiecewiseCoefficient {
            breakpoints: self.breakpoints.clone(),
            pieces: self.pieces.iter().map(|p| p.derivative()).collect(),
        }
    }

    /// Same function on a grid refined with the given extra breakpoints.
    pub fn refine(&self, extra: &[f64]) -> Self {
        let mut grid = self.breakpoints.clone();
        grid.extend(
            extra
                .iter()
                .copied()
                .filter(|&x| x > self.a() && x < self.b()),
        );
        grid.sort_by(|u, v| u.partial_cmp(v).unwrap());
        grid.dedup_by(|u, v| (*u - *v).abs() < 1e-14);
        let mut pieces = Vec::with_capacity(grid.len() - 1);
        for w in grid.windows(2) {
            let i = self.piece_index(0.5 * (w[0] + w[1]));
            pieces.push(self.pieces[i].compose_affine(1.0, w[0] - self.breakpoints[i]));
        }
        PiecewiseCoefficient {
            breakpoints: grid,
            pieces,
        }
    }

    /// Restriction to `[lo, hi] ⊆ [a, b]`.
    pub fn restrict(&self, lo: f64, hi: f64) -> Result<Self> {
        if !(self.a() <= lo && lo < hi && hi <= self.b()) {
            return Err(Error::InvalidInput(format!(
                "restriction [{lo}, {hi}] not inside [{}, {}]",
                self.a(),
                self.b()
            )));
        }
        let refined = self.refine(&[lo, hi]);
        let keep: Vec<usize> = (0..refined.num_pieces())
            .filter(|&i| {
                refined.breakpoints[i] >= lo - 1e-14 && refined.breakpoints[i + 1] <= hi + 1e-14
            })
            .collect();
        let breakpoints: Vec<f64> = keep
            .iter()
            .map(|&i| refined.breakpoints[i])
            .chain(std::iter::once(hi))
            .collect();
        let pieces = keep.iter().map(|&i| refined.pieces[i].clone()).collect();
        PiecewiseCoefficient::new(breakpoints, pieces)
    }

    /// Translate the domain by `delta`. Local-variable pieces are unchanged.
    pub fn shift(&self, delta: f64) -> Self {
        PiecewiseCoefficient {
            breakpoints: self.breakpoints.iter().map(|x| x + delta).collect(),
            pieces: self.pieces.clone(),
        }
    }

    fn binary_op(
        &self,
        other: &Self,
        op: impl Fn(&Polynomial, &Polynomial) -> Polynomial,
    ) -> Result<Self> {
        if (self.a() - other.a()).abs() > 1e-13 || (self.b() - other.b()).abs() > 1e-13 {
            return Err(Error::InvalidInput(
                "piecewise operands live on different intervals".into(),
            ));
        }
        let lhs = self.refine(other.breakpoints());
        let rhs = other.refine(self.breakpoints());
        let pieces = lhs
            .pieces
            .iter()
            .zip(rhs.pieces.iter())
            .map(|(u, v)| op(u, v))
            .collect();
        Ok(PiecewiseCoefficient {
            breakpoints: lhs.breakpoints,
            pieces,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.binary_op(other, |u, v| u.add(v))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.binary_op(other, |u, v| u.sub(v))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.binary_op(other, |u, v| u.mul(v))
    }

    pub fn scale(&self, k: f64) -> Self {
        PiecewiseCoefficient {
            breakpoints: self.breakpoints.clone(),
            pieces: self.pieces.iter().map(|p| p.scale(k)).collect(),
        }
    }

    /// Exact integral over the whole domain.
    pub fn integral(&self) -> f64 {
        (0..self.num_pieces())
            .map(|i| self.pieces[i].integral(0.0, self.breakpoints[i + 1] - self.breakpoints[i]))
            .sum()
    }

    /// Max of |f| over a sample grid (`n` interior samples per piece).
    pub fn max_abs_sampled(&self, n: usize) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.num_pieces() {
            let (lo, hi) = (self.breakpoints[i], self.breakpoints[i + 1]);
            for k in 0..=n {
                let x = lo + (hi - lo) * k as f64 / n as f64;
                m = m.max(self.eval_piece(i, x).abs());
            }
        }
        m
    }
}

/// One entry of a [`ValidationReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub lo: f64,
    pub hi: f64,
    pub message: String,
}

/// Outcome of [`CoefficientSet::validate`]; empty means the coefficient
/// hypotheses hold within the piecewise-polynomial class.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// The quadruple `(p, q, r, s)` on a common breakpoint grid.
#[derive(Debug, Clone)]
pub struct CoefficientSet {
    p: PiecewiseCoefficient,
    q: PiecewiseCoefficient,
    r: PiecewiseCoefficient,
    s: PiecewiseCoefficient,
}

impl CoefficientSet {
    /// Normalizes all four coefficients onto the union breakpoint grid.
    pub fn new(
        p: PiecewiseCoefficient,
        q: PiecewiseCoefficient,
        r: PiecewiseCoefficient,
        s: PiecewiseCoefficient,
    ) -> Result<Self> {
        let all = [&p, &q, &r, &s];
        let a = p.a();
        let b = p.b();
        if all
            .iter()
            .any(|c| (c.a() - a).abs() > 1e-13 || (c.b() - b).abs() > 1e-13)
        {
            return Err(Error::InvalidInput(
                "coefficients must share the same interval".into(),
            ));
        }
        let mut grid: Vec<f64> = Vec::new();
        for c in all {
            grid.extend_from_slice(c.breakpoints());
        }
        grid.sort_by(|u, v| u.partial_cmp(v).unwrap());
        grid.dedup_by(|u, v| (*u - *v).abs() < 1e-14);
        Ok(CoefficientSet {
            p: p.refine(&grid),
            q: q.refine(&grid),
            r: r.refine(&grid),
            s: s.refine(&grid),
        })
    }

    /// Schroedinger form: `p = r = 1`.
    pub fn schroedinger(q: PiecewiseCoefficient, s: PiecewiseCoefficient) -> Result<Self> {
        let (a, b) = (q.a(), q.b());
        CoefficientSet::new(
            PiecewiseCoefficient::constant(a, b, 1.0),
            q,
            PiecewiseCoefficient::constant(a, b, 1.0),
            s,
        )
    }

    /// Impedance form: `q = s = 0`, `r = p`.
    pub fn impedance(p: PiecewiseCoefficient) -> Result<Self> {
        let (a, b) = (p.a(), p.b());
        let set = CoefficientSet::new(
            p.clone(),
            PiecewiseCoefficient::constant(a, b, 0.0),
            p,
            PiecewiseCoefficient::constant(a, b, 0.0),
        )?;
        let report = set.validate();
        if !report.is_ok() {
            return Err(Error::InvalidInput(format!(
                "impedance coefficient invalid: {}",
                report.violations[0].message
            )));
        }
        Ok(set)
    }

    /// `-f''` on `(a, b)`: `p = r = 1`, `q = s = 0`.
    pub fn free(a: f64, b: f64) -> Self {
        CoefficientSet::schroedinger(
            PiecewiseCoefficient::constant(a, b, 0.0),
            PiecewiseCoefficient::constant(a, b, 0.0),
        )
        .unwrap()
    }

    pub fn a(&self) -> f64 {
        self.p.a()
    }

    pub fn b(&self) -> f64 {
        self.p.b()
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a(), self.b())
    }

    pub fn breakpoints(&self) -> &[f64] {
        self.p.breakpoints()
    }

    pub fn num_pieces(&self) -> usize {
        self.p.num_pieces()
    }

    pub fn p(&self) -> &PiecewiseCoefficient {
        &self.p
    }

    pub fn q(&self) -> &PiecewiseCoefficient {
        &self.q
    }

    pub fn r(&self) -> &PiecewiseCoefficient {
        &self.r
    }

    pub fn s(&self) -> &PiecewiseCoefficient {
        &self.s
    }

    pub fn is_schroedinger(&self) -> bool {
        let one = |c: &PiecewiseCoefficient| {
            (0..c.num_pieces()).all(|i| {
                let poly = c.piece(i);
                poly.degree() == 0 && (poly.eval(0.0) - 1.0).abs() < 1e-13
            })
        };
        one(&self.p) && one(&self.r)
    }

    /// Restriction to a subinterval.
    pub fn restrict(&self, lo: f64, hi: f64) -> Result<Self> {
        CoefficientSet::new(
            self.p.restrict(lo, hi)?,
            self.q.restrict(lo, hi)?,
            self.r.restrict(lo, hi)?,
            self.s.restrict(lo, hi)?,
        )
    }

    /// Checks the coefficient hypotheses on the piecewise class: `p` must be
    /// single-signed with no interior zero on each piece (so that `1/p` stays
    /// integrable) and `r` must be positive.
    pub fn validate(&self) -> ValidationReport {
        const SAMPLES: usize = 256;
        let mut report = ValidationReport::default();
        for i in 0..self.num_pieces() {
            let lo = self.breakpoints()[i];
            let hi = self.breakpoints()[i + 1];
            let mut p_min = f64::INFINITY;
            let mut p_sign_change = false;
            let mut r_min = f64::INFINITY;
            let mut prev_sign = 0.0;
            for k in 0..=SAMPLES {
                let x = lo + (hi - lo) * k as f64 / SAMPLES as f64;
                let pv = self.p.eval_piece(i, x);
                let rv = self.r.eval_piece(i, x);
                p_min = p_min.min(pv.abs());
                r_min = r_min.min(rv);
                if k > 0 && pv.signum() != prev_sign && pv != 0.0 {
                    p_sign_change = true;
                }
                prev_sign = pv.signum();
            }
            let p_scale = self.p.piece(i).coeff_scale().max(1e-300);
            if p_sign_change || p_min <= 1e-12 * p_scale {
                report.violations.push(Violation {
                    lo,
                    hi,
                    message: format!("p has an interior zero on piece [{lo}, {hi}]"),
                });
            }
            if r_min <= 0.0 {
                report.violations.push(Violation {
                    lo,
                    hi,
                    message: format!("r not positive on piece [{lo}, {hi}]"),
                });
            }
        }
        report
    }

    /// Sign of `p` (constant across the interval when validation passed and
    /// no piece changes sign; takes the sign at the left endpoint).
    pub fn p_positive(&self) -> bool {
        self.p.eval(self.a()) > 0.0
    }
}

/// Spectral parameter together with the principal square root of `-z`
/// (nonnegative real part), the natural scale of solution growth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyPoint {
    pub z: Complex64,
    pub sqrt_minus_z: Complex64,
}

impl EnergyPoint {
    pub fn new(z: Complex64) -> Self {
        let mut w = (-z).sqrt();
        if w.re < 0.0 || (w.re == 0.0 && w.im < 0.0) {
            w = -w;
        }
        EnergyPoint { z, sqrt_minus_z: w }
    }

    pub fn real(lambda: f64) -> Self {
        EnergyPoint::new(Complex64::new(lambda, 0.0))
    }

    pub fn is_real(&self) -> bool {
        self.z.im == 0.0
    }
}

impl From<Complex64> for EnergyPoint {
    fn from(z: Complex64) -> Self {
        EnergyPoint::new(z)
    }
}

impl From<f64> for EnergyPoint {
    fn from(lambda: f64) -> Self {
        EnergyPoint::real(lambda)
    }
}

/// Smooth compactly supported test function with explicit derivative,
/// for weak pairings against the formal potential.
pub struct TestFunction {
    pub support: (f64, f64),
    value: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    deriv: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl TestFunction {
    pub fn new(
        support: (f64, f64),
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        TestFunction {
            support,
            value: Box::new(value),
            deriv: Box::new(deriv),
        }
    }

    /// Polynomial bump `(x - lo)^k (hi - x)^k` on `[lo, hi]`, `C^{k-1}` at
    /// the support edges, exactly integrable.
    pub fn poly_bump(lo: f64, hi: f64, k: u32) -> Self {
        let val = move |x: f64| {
            if x <= lo || x >= hi {
                0.0
            } else {
                (x - lo).powi(k as i32) * (hi - x).powi(k as i32)
            }
        };
        let der = move |x: f64| {
            if x <= lo || x >= hi {
                0.0
            } else {
                let a = (x - lo).powi(k as i32 - 1) * (hi - x).powi(k as i32);
                let b = (x - lo).powi(k as i32) * (hi - x).powi(k as i32 - 1);
                k as f64 * (a - b)
            }
        };
        TestFunction::new((lo, hi), val, der)
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    pub fn eval_deriv(&self, x: f64) -> f64 {
        (self.deriv)(x)
    }
}

/// Weak pairing of the formal potential `-(sp)' + s^2 p + q` with a test
/// function: `∫ [s p χ' + (s^2 p + q) χ] dx`. Steps in `s` contribute their
/// delta terms through the `s p χ'` integral.
pub fn formal_potential_pairing(c: &CoefficientSet, chi: &TestFunction) -> Result<f64> {
    let (lo, hi) = chi.support;
    if !(lo > c.a() && hi < c.b() && lo < hi) {
        return Err(Error::InvalidInput(format!(
            "test function support [{lo}, {hi}] must lie strictly inside ({}, {})",
            c.a(),
            c.b()
        )));
    }
    let integrand = |x: f64| {
        let i = c.p().piece_index(x);
        let p = c.p().eval_piece(i, x);
        let q = c.q().eval_piece(i, x);
        let s = c.s().eval_piece(i, x);
        s * p * chi.eval_deriv(x) + (s * s * p + q) * chi.eval(x)
    };
    Ok(quad::integrate(integrand, lo, hi, c.breakpoints(), 1e-12))
}
