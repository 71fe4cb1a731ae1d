//! Dense univariate real polynomials with exact ring operations.
//!
//! Piecewise coefficients store one polynomial per subinterval, expressed in
//! the piece-local variable `t = x - left` for conditioning. Everything here
//! is exact arithmetic on the coefficient vectors, so products, derivatives
//! and antiderivatives of piecewise-polynomial data stay inside the class.

/// Polynomial with real coefficients in ascending order: `c[0] + c[1] t + ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = Polynomial { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: vec![0.0] }
    }

    pub fn constant(c: f64) -> Self {
        Polynomial { coeffs: vec![c] }
    }

    /// The monomial `t`.
    pub fn identity() -> Self {
        Polynomial {
            coeffs: vec![0.0, 1.0],
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    fn trim(&mut self) {
        while self.coeffs.len() > 1 && self.coeffs.last() == Some(&0.0) {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.coeffs.push(0.0);
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * t + c;
        }
        acc
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![0.0; n];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            out[i] += c;
        }
        Polynomial::new(out)
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, k: f64) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() <= 1 {
            return Polynomial::zero();
        }
        Polynomial::new(
            self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(i, c)| c * (i + 1) as f64)
                .collect(),
        )
    }

    /// Antiderivative with zero constant term.
    pub fn antiderivative(&self) -> Polynomial {
        let mut out = vec![0.0; self.coeffs.len() + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i + 1] = c / (i + 1) as f64;
        }
        Polynomial::new(out)
    }

    /// Definite integral over `[t0, t1]` in the local variable.
    pub fn integral(&self, t0: f64, t1: f64) -> f64 {
        let anti = self.antiderivative();
        anti.eval(t1) - anti.eval(t0)
    }

    /// Substitute `t -> alpha * u + beta`, returning a polynomial in `u`.
    pub fn compose_affine(&self, alpha: f64, beta: f64) -> Polynomial {
        let mut acc = Polynomial::zero();
        let lin = Polynomial::new(vec![beta, alpha]);
        for &c in self.coeffs.iter().rev() {
            acc = acc.mul(&lin).add(&Polynomial::constant(c));
        }
        acc
    }

    /// Largest absolute coefficient, used as a crude scale estimate.
    pub fn coeff_scale(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// Chebyshev interpolation of `f` on `[lo, hi]` with `deg + 1` nodes,
/// returned as a monomial polynomial in the local variable `t = x - lo`.
pub fn chebyshev_fit(f: impl Fn(f64) -> f64, lo: f64, hi: f64, deg: usize) -> Polynomial {
    let n = deg + 1;
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    // Chebyshev-Gauss nodes and values
    let mut vals = Vec::with_capacity(n);
    let mut nodes = Vec::with_capacity(n);
    for j in 0..n {
        let theta = std::f64::consts::PI * (j as f64 + 0.5) / n as f64;
        let xi = theta.cos();
        nodes.push(xi);
        vals.push(f(mid + half * xi));
    }
    // Discrete Chebyshev transform (naive O(n^2) is fine at these degrees)
    let mut cheb = vec![0.0; n];
    for (k, ck) in cheb.iter_mut().enumerate() {
        let mut acc = 0.0;
        for j in 0..n {
            let theta = std::f64::consts::PI * (j as f64 + 0.5) / n as f64;
            acc += vals[j] * (k as f64 * theta).cos();
        }
        *ck = acc * 2.0 / n as f64;
    }
    cheb[0] *= 0.5;
    let _ = nodes;

    // Convert the Chebyshev series in xi to a monomial polynomial in xi
    let mut poly_xi = Polynomial::zero();
    let mut t_prev = Polynomial::constant(1.0);
    let mut t_curr = Polynomial::identity();
    let two_t = Polynomial::new(vec![0.0, 2.0]);
    for (k, &ck) in cheb.iter().enumerate() {
        let tk = match k {
            0 => t_prev.clone(),
            1 => t_curr.clone(),
            _ => {
                let next = two_t.mul(&t_curr).sub(&t_prev);
                t_prev = std::mem::replace(&mut t_curr, next);
                t_curr.clone()
            }
        };
        poly_xi = poly_xi.add(&tk.scale(ck));
    }
    // xi = (x - mid) / half = (t - (mid - lo)) / half with t = x - lo
    poly_xi.compose_affine(1.0 / half, -(mid - lo) / half)
}
