//! Liouville transforms and their Schroedinger-gauge and impedance
//! specializations.
//!
//! A map is the triple `(eta, kappa, nu)`: a strictly increasing bijection
//! `eta` between the intervals, a nonvanishing factor `kappa` and a gauge
//! function `nu`. The transformed coefficients follow
//!
//! ```text
//! eta' r2(eta) = kappa^2 r1
//! p2(eta)      = eta' kappa^2 p1
//! eta' s2(eta) = s1 + (kappa' - nu / p1) / kappa
//! eta' q2(eta) = kappa^2 q1 + 2 kappa nu s1 - nu^2 / p1 + kappa' nu - kappa nu'
//! ```
//!
//! and `(V f2)(x1) = kappa(x1) f2(eta(x1))` is unitary between the weighted
//! spaces, carrying one realization onto the other.
//!
//! Transformed coefficients are generally not polynomial in the new
//! variable, so they are resampled onto the image grid by per-piece
//! Chebyshev fits with an explicit residual cap; the gauge case
//! (`p = r = 1`, `eta` a shift, `kappa = 1`) stays inside the polynomial
//! class and is computed exactly.
//!
//! Note on signs: the gauge relations are usually written additively,
//! `s2 = s1 + nu`; that `nu` is the negative of the map's `nu`. [`GaugeSpec`]
//! uses the additive convention, [`LiouvilleMap`] the general one, and
//! [`GaugeSpec::to_map`] converts.

use crate::coefficients::{CoefficientSet, PiecewiseCoefficient};
use crate::error::{Error, Result};
use crate::poly::{chebyshev_fit, Polynomial};
use crate::quad;
use crate::spectral::BoundaryCondition;

const FIT_DEGREES: [usize; 7] = [3, 5, 8, 12, 16, 20, 24];

/// Fit a sampled function to a piecewise polynomial on the given edges,
/// escalating the degree until the residual cap is met.
pub fn fit_piecewise(
    edges: &[f64],
    f: &dyn Fn(f64) -> f64,
    cap: f64,
) -> Result<PiecewiseCoefficient> {
    let mut pieces = Vec::with_capacity(edges.len() - 1);
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mut fitted: Option<Polynomial> = None;
        let mut worst = f64::INFINITY;
        for &deg in &FIT_DEGREES {
            let poly = chebyshev_fit(f, lo, hi, deg);
            // residual on an offset grid
            let m = 2 * (deg + 2);
            let mut res: f64 = 0.0;
            let mut scale: f64 = 1.0;
            for k in 0..=m {
                let x = lo + (hi - lo) * (k as f64 + 0.31) / (m as f64 + 1.0);
                let exact = f(x);
                scale = scale.max(exact.abs());
                res = res.max((poly.eval(x - lo) - exact).abs());
            }
            worst = res / scale;
            if worst <= cap {
                fitted = Some(poly);
                break;
            }
        }
        match fitted {
            Some(p) => pieces.push(p),
            None => {
                return Err(Error::FitResidual {
                    lo,
                    hi,
                    residual: worst,
                    cap,
                })
            }
        }
    }
    PiecewiseCoefficient::new(edges.to_vec(), pieces)
}

/// The triple `(eta, kappa, nu)` on a common breakpoint grid.
#[derive(Debug, Clone)]
pub struct LiouvilleMap {
    eta: PiecewiseCoefficient,
    kappa: PiecewiseCoefficient,
    nu: PiecewiseCoefficient,
}

impl LiouvilleMap {
    pub fn new(
        eta: PiecewiseCoefficient,
        kappa: PiecewiseCoefficient,
        nu: PiecewiseCoefficient,
    ) -> Result<Self> {
        let (a, b) = (eta.a(), eta.b());
        if (kappa.a() - a).abs() > 1e-13
            || (kappa.b() - b).abs() > 1e-13
            || (nu.a() - a).abs() > 1e-13
            || (nu.b() - b).abs() > 1e-13
        {
            return Err(Error::MapInvalid(
                "eta, kappa, nu must share the same domain".into(),
            ));
        }
        let mut grid: Vec<f64> = eta.breakpoints().to_vec();
        grid.extend_from_slice(kappa.breakpoints());
        grid.extend_from_slice(nu.breakpoints());
        grid.sort_by(|u, v| u.partial_cmp(v).unwrap());
        grid.dedup_by(|u, v| (*u - *v).abs() < 1e-14);
        let map = LiouvilleMap {
            eta: eta.refine(&grid),
            kappa: kappa.refine(&grid),
            nu: nu.refine(&grid),
        };
        map.check()?;
        Ok(map)
    }

    /// Identity map on `[a, b]`.
    pub fn identity(a: f64, b: f64) -> Self {
        LiouvilleMap {
            eta: PiecewiseCoefficient::from_global(vec![a, b], vec![Polynomial::identity()])
                .unwrap(),
            kappa: PiecewiseCoefficient::constant(a, b, 1.0),
            nu: PiecewiseCoefficient::constant(a, b, 0.0),
        }
    }

    fn check(&self) -> Result<()> {
        const N: usize = 64;
        let dk = self.kappa.derivative();
        let _ = dk;
        let deta = self.eta.derivative();
        for i in 0..self.eta.num_pieces() {
            let (lo, hi) = (self.eta.breakpoints()[i], self.eta.breakpoints()[i + 1]);
            for k in 0..=N {
                let x = lo + (hi - lo) * k as f64 / N as f64;
                if deta.eval_piece(i, x) <= 0.0 {
                    return Err(Error::MapInvalid(format!("eta' not positive at x = {x}")));
                }
                if self.kappa.eval_piece(i, x).abs() < 1e-12 {
                    return Err(Error::MapInvalid(format!("kappa vanishes at x = {x}")));
                }
            }
        }
        // eta and kappa must be continuous for the transform to make sense
        for &bp in &self.eta.breakpoints()[1..self.eta.breakpoints().len() - 1] {
            if self.eta.jump_at(bp).abs() > 1e-10 {
                return Err(Error::MapInvalid(format!("eta jumps at {bp}")));
            }
            if self.kappa.jump_at(bp).abs() > 1e-10 {
                return Err(Error::MapInvalid(format!("kappa jumps at {bp}")));
            }
            if self.nu.jump_at(bp).abs() > 1e-10 {
                return Err(Error::MapInvalid(format!("nu jumps at {bp}")));
            }
        }
        Ok(())
    }

    pub fn eta(&self) -> &PiecewiseCoefficient {
        &self.eta
    }

    pub fn kappa(&self) -> &PiecewiseCoefficient {
        &self.kappa
    }

    pub fn nu(&self) -> &PiecewiseCoefficient {
        &self.nu
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.eta.a(), self.eta.b())
    }

    pub fn image(&self) -> (f64, f64) {
        (
            self.eta.eval(self.eta.a()),
            self.eta.eval_left(self.eta.b()),
        )
    }

    /// Invert `eta` at `y` by bisection with Newton polish.
    pub fn eta_inverse(&self, y: f64) -> f64 {
        let (mut lo, mut hi) = self.domain();
        let deta = self.eta.derivative();
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.eta.eval(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-9 * (1.0 + y.abs()) {
                break;
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..8 {
            let d = deta.eval(x);
            if d <= 0.0 {
                break;
            }
            let step = (self.eta.eval(x) - y) / d;
            x -= step;
            x = x.clamp(lo - 1e-12, hi + 1e-12);
            if step.abs() < 1e-15 * (1.0 + x.abs()) {
                break;
            }
        }
        x.clamp(self.domain().0, self.domain().1)
    }

    /// Composite map acting as `self` first, then `next` on the image:
    /// `eta = eta2 ∘ eta1`, `kappa = kappa1 (kappa2 ∘ eta1)`,
    /// `nu = nu1 (kappa2 ∘ eta1) + (nu2 ∘ eta1) / kappa1`.
    pub fn compose(&self, next: &LiouvilleMap) -> Result<LiouvilleMap> {
        let mut edges: Vec<f64> = self.eta.breakpoints().to_vec();
        for &bp in next.eta.breakpoints() {
            edges.push(self.eta_inverse(bp));
        }
        edges.sort_by(|u, v| u.partial_cmp(v).unwrap());
        edges.dedup_by(|u, v| (*u - *v).abs() < 1e-12);
        let eta_f = |x: f64| next.eta.eval(self.eta.eval(x));
        let kappa_f = |x: f64| self.kappa.eval(x) * next.kappa.eval(self.eta.eval(x));
        let nu_f = |x: f64| {
            self.nu.eval(x) * next.kappa.eval(self.eta.eval(x))
                + next.nu.eval(self.eta.eval(x)) / self.kappa.eval(x)
        };
        LiouvilleMap::new(
            fit_piecewise(&edges, &eta_f, 1e-11)?,
            fit_piecewise(&edges, &kappa_f, 1e-11)?,
            fit_piecewise(&edges, &nu_f, 1e-11)?,
        )
    }

    /// Transport of a boundary angle at the domain endpoint (`left` = at a)
    /// onto the image problem:
    /// `cos(phi2) ∝ kappa cos(phi1) - nu sin(phi1)`,
    /// `sin(phi2) ∝ kappa^-1 sin(phi1)`, with endpoint limits of the data.
    pub fn transport_angle(&self, phi: BoundaryCondition, left: bool) -> BoundaryCondition {
        let (k, n) = if left {
            (self.kappa.eval(self.kappa.a()), self.nu.eval(self.nu.a()))
        } else {
            (
                self.kappa.eval_left(self.kappa.b()),
                self.nu.eval_left(self.nu.b()),
            )
        };
        BoundaryCondition::from_direction(k * phi.cos() - n * phi.sin(), phi.sin() / k)
    }
}

/// Apply the map to a coefficient set, producing the transformed problem on
/// the image interval. Output pieces are refit with residual cap `1e-9`.
pub fn liouville_apply(c1: &CoefficientSet, map: &LiouvilleMap) -> Result<CoefficientSet> {
    const CAP: f64 = 1e-9;
    let mut in_edges: Vec<f64> = c1.breakpoints().to_vec();
    in_edges.extend_from_slice(map.eta().breakpoints());
    in_edges.sort_by(|u, v| u.partial_cmp(v).unwrap());
    in_edges.dedup_by(|u, v| (*u - *v).abs() < 1e-13);
    if (in_edges[0] - c1.a()).abs() > 1e-12 || (in_edges[in_edges.len() - 1] - c1.b()).abs() > 1e-12
    {
        return Err(Error::MapInvalid(
            "map domain must coincide with the coefficient interval".into(),
        ));
    }
    let out_edges: Vec<f64> = in_edges
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            if i == 0 {
                map.eta().eval(x)
            } else {
                map.eta().eval_left(x)
            }
        })
        .collect();

    let deta = map.eta().derivative();
    let dkappa = map.kappa().derivative();
    let dnu = map.nu().derivative();
    let at = |x2: f64| {
        let x1 = map.eta_inverse(x2);
        let ep = deta.eval(x1);
        let k = map.kappa().eval(x1);
        let kp = dkappa.eval(x1);
        let n = map.nu().eval(x1);
        let np = dnu.eval(x1);
        let p1 = c1.p().eval(x1);
        let q1 = c1.q().eval(x1);
        let r1 = c1.r().eval(x1);
        let s1 = c1.s().eval(x1);
        (ep, k, kp, n, np, p1, q1, r1, s1)
    };
    let r2 = |x2: f64| {
        let (ep, k, _, _, _, _, _, r1, _) = at(x2);
        k * k * r1 / ep
    };
    let p2 = |x2: f64| {
        let (ep, k, _, _, _, p1, _, _, _) = at(x2);
        ep * k * k * p1
    };
    let s2 = |x2: f64| {
        let (ep, k, kp, n, _, p1, _, _, s1) = at(x2);
        (s1 + (kp - n / p1) / k) / ep
    };
    let q2 = |x2: f64| {
        let (ep, k, kp, n, np, p1, q1, _, s1) = at(x2);
        (k * k * q1 + 2.0 * k * n * s1 - n * n / p1 + kp * n - k * np) / ep
    };
    let out = CoefficientSet::new(
        fit_piecewise(&out_edges, &p2, CAP)?,
        fit_piecewise(&out_edges, &q2, CAP)?,
        fit_piecewise(&out_edges, &r2, CAP)?,
        fit_piecewise(&out_edges, &s2, CAP)?,
    )?;
    let report = out.validate();
    if !report.is_ok() {
        return Err(Error::MapInvalid(format!(
            "transformed coefficients invalid: {}",
            report.violations[0].message
        )));
    }
    Ok(out)
}

/// Gauge freedom of the Schroedinger form: shift by `eta0` and
/// `s2 = s1 + nu`, `q2 = q1 - 2 nu s1 - nu^2 + nu'` (additive sign
/// convention). Exact in the piecewise-polynomial class.
#[derive(Debug, Clone)]
pub struct GaugeSpec {
    pub eta0: f64,
    pub nu: PiecewiseCoefficient,
}

impl GaugeSpec {
    pub fn new(eta0: f64, nu: PiecewiseCoefficient) -> Self {
        GaugeSpec { eta0, nu }
    }

    /// The equivalent general map (`eta = x + eta0`, `kappa = 1`,
    /// `nu_map = -nu`).
    pub fn to_map(&self) -> Result<LiouvilleMap> {
        let (a, b) = (self.nu.a(), self.nu.b());
        let eta = PiecewiseCoefficient::from_global(
            vec![a, b],
            vec![Polynomial::new(vec![self.eta0, 1.0])],
        )?;
        LiouvilleMap::new(
            eta.refine(self.nu.breakpoints()),
            PiecewiseCoefficient::constant(a, b, 1.0).refine(self.nu.breakpoints()),
            self.nu.scale(-1.0),
        )
    }
}

/// Apply a gauge transform to a Schroedinger-form problem.
pub fn gauge_transform(c1: &CoefficientSet, spec: &GaugeSpec) -> Result<CoefficientSet> {
    if !c1.is_schroedinger() {
        return Err(Error::InvalidInput(
            "gauge transform requires p = r = 1".into(),
        ));
    }
    let nu = &spec.nu;
    if (nu.a() - c1.a()).abs() > 1e-13 || (nu.b() - c1.b()).abs() > 1e-13 {
        return Err(Error::InvalidInput(
            "nu must live on the coefficient interval".into(),
        ));
    }
    for &bp in &nu.breakpoints()[1..nu.breakpoints().len() - 1] {
        if nu.jump_at(bp).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "nu must be continuous; jump at {bp}"
            )));
        }
    }
    let s2 = c1.s().add(nu)?;
    let q2 = c1
        .q()
        .sub(&nu.mul(c1.s())?.scale(2.0))?
        .sub(&nu.mul(nu)?)?
        .add(&nu.derivative())?;
    let (a, b) = c1.interval();
    CoefficientSet::new(
        PiecewiseCoefficient::constant(a, b, 1.0).shift(self_shift(spec.eta0)),
        q2.shift(spec.eta0),
        PiecewiseCoefficient::constant(a, b, 1.0).shift(self_shift(spec.eta0)),
        s2.shift(spec.eta0),
    )
}

// shift helper so the constant coefficients land on the shifted interval
fn self_shift(eta0: f64) -> f64 {
    eta0
}

/// Impedance rescaling: `p2(eta0 + x) = p1(x) (nu0 ∫_{c1}^{x} dt/p1 + kappa0)^2`,
/// with `q2 = s2 = 0`, `r2 = p2`. The factor must not vanish on the interval.
#[derive(Debug, Clone, Copy)]
pub struct ImpedanceSpec {
    pub eta0: f64,
    pub nu0: f64,
    pub kappa0: f64,
    /// Base point of the `1/p1` integral.
    pub base: f64,
}

/// Apply an impedance-form rescaling to `p1` (the problem `q = s = 0`,
/// `r = p = p1`).
pub fn impedance_transform(
    p1: &PiecewiseCoefficient,
    spec: &ImpedanceSpec,
) -> Result<CoefficientSet> {
    let (a, b) = (p1.a(), p1.b());
    if !(spec.base >= a && spec.base <= b) {
        return Err(Error::InvalidInput(format!(
            "base point {} outside [{a}, {b}]",
            spec.base
        )));
    }
    // cumulative antiderivative of 1/p1 from the base point
    let edges = p1.breakpoints().to_vec();
    let inv_p = |x: f64| 1.0 / p1.eval(x);
    let big_p = |x: f64| {
        if x >= spec.base {
            quad::integrate(inv_p, spec.base, x, &edges, 1e-13)
        } else {
            -quad::integrate(inv_p, x, spec.base, &edges, 1e-13)
        }
    };
    let factor = |x: f64| spec.nu0 * big_p(x) + spec.kappa0;
    // the factor is monotone in x (sign of nu0/p1); endpoint checks suffice,
    // but sample anyway for odd p1 signs
    const N: usize = 129;
    for k in 0..=N {
        let x = a + (b - a) * k as f64 / N as f64;
        if factor(x).abs() < 1e-10 * (1.0 + spec.kappa0.abs()) {
            return Err(Error::MapInvalid(format!(
                "impedance factor vanishes near x = {x}"
            )));
        }
    }
    let p2_fn = |x2: f64| {
        let x1 = x2 - spec.eta0;
        let f = factor(x1);
        p1.eval(x1) * f * f
    };
    let out_edges: Vec<f64> = edges.iter().map(|x| x + spec.eta0).collect();
    let p2 = fit_piecewise(&out_edges, &p2_fn, 1e-9)?;
    CoefficientSet::impedance(p2)
}

impl ImpedanceSpec {
    /// The equivalent general map: `eta = x + eta0`,
    /// `kappa = nu0 P + kappa0`, `nu = nu0` (then `s2 = q2 = 0` follows).
    pub fn to_map(&self, p1: &PiecewiseCoefficient) -> Result<LiouvilleMap> {
        let (a, b) = (p1.a(), p1.b());
        let edges = p1.breakpoints().to_vec();
        let inv_p = |x: f64| 1.0 / p1.eval(x);
        let base = self.base;
        let nu0 = self.nu0;
        let kappa0 = self.kappa0;
        let kappa_fn = move |x: f64| {
            let pint = if x >= base {
                quad::integrate(inv_p, base, x, &edges, 1e-13)
            } else {
                -quad::integrate(inv_p, x, base, &edges, 1e-13)
            };
            nu0 * pint + kappa0
        };
        let eta = PiecewiseCoefficient::from_global(
            vec![a, b],
            vec![Polynomial::new(vec![self.eta0, 1.0])],
        )?;
        LiouvilleMap::new(
            eta.refine(p1.breakpoints()),
            fit_piecewise(p1.breakpoints(), &kappa_fn, 1e-11)?,
            PiecewiseCoefficient::constant(a, b, self.nu0).refine(p1.breakpoints()),
        )
    }
}

/// Pullback `(V f2)(x1) = kappa(x1) f2(eta(x1))` of a function on the image
/// interval.
pub fn pullback<'a>(
    map: &'a LiouvilleMap,
    f2: impl Fn(f64) -> f64 + 'a,
) -> impl Fn(f64) -> f64 + 'a {
    move |x1: f64| map.kappa().eval(x1) * f2(map.eta().eval(x1))
}

/// Report of the expression-equality test on a subinterval for two
/// Schroedinger-form problems: `tau1 = tau2` there iff `s1 - s2` has no
/// jumps and `(s1 - s2)' = s1^2 - s2^2 + q1 - q2` holds a.e.
#[derive(Debug, Clone)]
pub struct SameExpressionReport {
    /// Max of `|(s1-s2)' - (s1^2 - s2^2 + q1 - q2)|` over the sample grid.
    pub max_defect: f64,
    /// Jumps of `s1 - s2` at interior breakpoints of the subinterval.
    pub jumps: Vec<(f64, f64)>,
}

impl SameExpressionReport {
    pub fn max_jump(&self) -> f64 {
        self.jumps.iter().fold(0.0, |m, &(_, j)| m.max(j.abs()))
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_defect <= tol && self.max_jump() <= tol
    }
}

/// Check whether two Schroedinger-form expressions agree on a subinterval.
pub fn same_expression(
    c1: &CoefficientSet,
    c2: &CoefficientSet,
    sub: (f64, f64),
) -> Result<SameExpressionReport> {
    if !c1.is_schroedinger() || !c2.is_schroedinger() {
        return Err(Error::InvalidInput(
            "expression comparison requires p = r = 1 on both sides".into(),
        ));
    }
    let (lo, hi) = sub;
    if !(lo < hi && lo >= c1.a().max(c2.a()) - 1e-12 && hi <= c1.b().min(c2.b()) + 1e-12) {
        return Err(Error::InvalidInput(format!(
            "subinterval [{lo}, {hi}] not inside both problems"
        )));
    }
    let mut grid: Vec<f64> = c1
        .breakpoints()
        .iter()
        .chain(c2.breakpoints().iter())
        .copied()
        .filter(|&x| x > lo + 1e-13 && x < hi - 1e-13)
        .collect();
    grid.sort_by(|u, v| u.partial_cmp(v).unwrap());
    grid.dedup_by(|u, v| (*u - *v).abs() < 1e-13);

    let mut jumps = Vec::new();
    for &bp in &grid {
        let jump =
            (c1.s().eval(bp) - c2.s().eval(bp)) - (c1.s().eval_left(bp) - c2.s().eval_left(bp));
        if jump.abs() > 0.0 {
            jumps.push((bp, jump));
        }
    }

    let ds1 = c1.s().derivative();
    let ds2 = c2.s().derivative();
    let mut edges = vec![lo];
    edges.extend(grid.iter().copied());
    edges.push(hi);
    const SAMPLES: usize = 64;
    let mut max_defect: f64 = 0.0;
    for w in edges.windows(2) {
        for k in 0..SAMPLES {
            let x = w[0] + (w[1] - w[0]) * (k as f64 + 0.5) / SAMPLES as f64;
            let s1 = c1.s().eval(x);
            let s2 = c2.s().eval(x);
            let lhs = ds1.eval(x) - ds2.eval(x);
            let rhs = s1 * s1 - s2 * s2 + c1.q().eval(x) - c2.q().eval(x);
            max_defect = max_defect.max((lhs - rhs).abs());
        }
    }
    Ok(SameExpressionReport { max_defect, jumps })
}
