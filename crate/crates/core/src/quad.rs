//! Gauss-Legendre quadrature nodes, built once per order by Newton iteration
//! on the Legendre polynomials.

/// Nodes and weights on [-1, 1].
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-style initial guess for the i-th root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n and P_n' by the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Integrate `f` over [a, b] with a single Gauss-Legendre panel.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, order: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(order);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    for (x, w) in nodes.iter().zip(&weights) {
        sum += w * f(mid + half * x);
    }
    sum * half
}
