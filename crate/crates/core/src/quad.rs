//! Adaptive Gauss-Kronrod quadrature for scalar integrands.
//!
//! Used for weak pairings, norm comparisons and oracle integrals. The
//! precision-critical trace quadratures (kernels, norming constants) go
//! through the augmented ODE path instead, see [`crate::quasi_ode`].

// 7-point Gauss / 15-point Kronrod nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let fsum = f(mid - dx) + f(mid + dx);
        kronrod += WGK[j] * fsum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * fsum;
        }
    }
    kronrod *= half;
    gauss *= half;
    (kronrod, (kronrod - gauss).abs())
}

/// Adaptive quadrature of `f` over `[a, b]`, splitting at the supplied
/// breakpoints first. `a < b` required.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, breakpoints: &[f64], tol: f64) -> f64 {
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > a && x < b)
        .collect();
    cuts.sort_by(|u, v| u.partial_cmp(v).unwrap());
    cuts.dedup();
    let mut edges = vec![a];
    edges.extend(cuts);
    edges.push(b);

    let mut total = 0.0;
    for w in edges.windows(2) {
        total += adaptive_segment(&f, w[0], w[1], tol, 0);
    }
    total
}

fn adaptive_segment(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    let (val, err) = gk15(f, a, b);
    if err <= tol * (1.0 + val.abs()) || depth >= 40 || (b - a) < 1e-14 {
        return val;
    }
    let mid = 0.5 * (a + b);
    adaptive_segment(f, a, mid, 0.5 * tol, depth + 1)
        + adaptive_segment(f, mid, b, 0.5 * tol, depth + 1)
}
