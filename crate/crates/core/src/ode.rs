//! Adaptive Dormand-Prince 5(4) integration with stored fourth-order dense
//! output. Trajectories keep every accepted step's interpolation polynomial so
//! that solutions (and any quadrature components carried in the state) can be
//! evaluated anywhere afterwards.

use crate::error::CoreError;
use crate::Result;

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A21: f64 = 0.2;
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
// Error coefficients: difference between the 5th and embedded 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Dense output coefficients (Hairer, Norsett, Wanner; DOPRI5 continuous extension).
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            h_max: f64::INFINITY,
            max_steps: 50_000_000,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        OdeOptions {
            rtol: tol,
            atol: tol * 1e-2,
            ..Default::default()
        }
    }
}

/// One accepted step with its dense-output polynomial, five coefficients per
/// state component.
#[derive(Debug, Clone)]
struct DenseStep {
    t0: f64,
    h: f64,
    cont: Vec<[f64; 5]>,
}

impl DenseStep {
    fn eval_component(&self, idx: usize, t: f64) -> f64 {
        let theta = (t - self.t0) / self.h;
        let th1 = 1.0 - theta;
        let c = &self.cont[idx];
        c[0] + theta * (c[1] + th1 * (c[2] + theta * (c[3] + th1 * c[4])))
    }
}

#[derive(Debug, Clone)]
pub struct OdeSolution {
    dim: usize,
    t0: f64,
    t_end: f64,
    steps: Vec<DenseStep>,
    y_end: Vec<f64>,
    pub n_accepted: usize,
    pub n_rejected: usize,
}

impl OdeSolution {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn t_start(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn y_end(&self) -> &[f64] {
        &self.y_end
    }

    /// Accepted step endpoints, including t0.
    pub fn step_times(&self) -> Vec<f64> {
        let mut ts = Vec::with_capacity(self.steps.len() + 1);
        ts.push(self.t0);
        ts.extend(self.steps.iter().map(|s| s.t0 + s.h));
        ts
    }

    pub fn contains(&self, t: f64) -> bool {
        let lo = self.t0.min(self.t_end);
        let hi = self.t0.max(self.t_end);
        t >= lo - 1e-12 * (1.0 + hi.abs()) && t <= hi + 1e-12 * (1.0 + hi.abs())
    }

    fn step_for(&self, t: f64) -> Result<&DenseStep> {
        if !self.contains(t) {
            return Err(CoreError::OutOfTrajectory {
                t,
                t0: self.t0,
                t1: self.t_end,
            });
        }
        // Binary search over step start times (forward integration only).
        let mut lo = 0usize;
        let mut hi = self.steps.len() - 1;
        while lo < hi {
            let mid = (lo + hi + 1) / 2;
            if self.steps[mid].t0 <= t {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        Ok(&self.steps[lo])
    }

    pub fn eval_component(&self, idx: usize, t: f64) -> Result<f64> {
        Ok(self.step_for(t)?.eval_component(idx, t))
    }

    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        let step = self.step_for(t)?;
        Ok((0..self.dim)
            .map(|i| step.eval_component(i, t))
            .collect())
    }
}

/// Integrate dy/dt = rhs(t, y) from t0 to t_end (t_end > t0). The guard is
/// called on every accepted state and may abort the integration.
pub fn integrate<F, G>(
    mut rhs: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    opts: &OdeOptions,
    mut guard: G,
) -> Result<OdeSolution>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    G: FnMut(f64, &[f64]) -> Result<()>,
{
    assert!(t_end > t0, "integrate expects t_end > t0");
    let dim = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; dim]).collect();
    let mut y_stage = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];
    rhs(t, &y, &mut k[0]);
    guard(t, &y)?;

    // Initial step size from the magnitude of the first derivative.
    let d0: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let d1: f64 = k[0].iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut h = if d1 > 1e-10 {
        (0.01 * (d0.max(1e-6) / d1)).min(t_end - t0)
    } else {
        1e-6 * (t_end - t0)
    };
    h = h.min(opts.h_max).max(1e-12);

    let mut steps = Vec::new();
    let mut n_accepted = 0usize;
    let mut n_rejected = 0usize;

    while t < t_end {
        if n_accepted + n_rejected > opts.max_steps {
            return Err(CoreError::OdeFailure(format!(
                "step budget {} exhausted at t={t}",
                opts.max_steps
            )));
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }

        for i in 0..dim {
            y_stage[i] = y[i] + h * A21 * k[0][i];
        }
        rhs(t + C[1] * h, &y_stage, &mut k[1]);
        for i in 0..dim {
            y_stage[i] = y[i] + h * (A31 * k[0][i] + A32 * k[1][i]);
        }
        rhs(t + C[2] * h, &y_stage, &mut k[2]);
        for i in 0..dim {
            y_stage[i] = y[i] + h * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
        }
        rhs(t + C[3] * h, &y_stage, &mut k[3]);
        for i in 0..dim {
            y_stage[i] = y[i]
                + h * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
        }
        rhs(t + C[4] * h, &y_stage, &mut k[4]);
        for i in 0..dim {
            y_stage[i] = y[i]
                + h * (A61 * k[0][i] + A62 * k[1][i] + A63 * k[2][i] + A64 * k[3][i]
                    + A65 * k[4][i]);
        }
        rhs(t + h, &y_stage, &mut k[5]);
        for i in 0..dim {
            y_new[i] = y[i]
                + h * (B1 * k[0][i] + B3 * k[2][i] + B4 * k[3][i] + B5 * k[4][i]
                    + B6 * k[5][i]);
        }
        rhs(t + h, &y_new, &mut k[6]);

        let mut err_acc = 0.0;
        for i in 0..dim {
            let e = h
                * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i]
                    + E7 * k[6][i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err_acc += (e / sc) * (e / sc);
        }
        let err = (err_acc / dim as f64).sqrt();

        if err <= 1.0 {
            // Accept: store the dense polynomial for this interval.
            let mut cont = Vec::with_capacity(dim);
            for i in 0..dim {
                let ydiff = y_new[i] - y[i];
                let bspl = h * k[0][i] - ydiff;
                let r5 = h
                    * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i]
                        + D6 * k[5][i]
                        + D7 * k[6][i]);
                cont.push([y[i], ydiff, bspl, ydiff - h * k[6][i] - bspl, r5]);
            }
            steps.push(DenseStep { t0: t, h, cont });
            t += h;
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6); // FSAL
            n_accepted += 1;
            guard(t, &y)?;
            if !y.iter().all(|v| v.is_finite()) {
                return Err(CoreError::NanDetected { t });
            }
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
            h = (h * fac).min(opts.h_max);
        } else {
            n_rejected += 1;
            let fac = (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            h *= fac;
            if h < 1e-14 * (1.0 + t.abs()) {
                return Err(CoreError::OdeFailure(format!(
                    "step size underflow at t={t}"
                )));
            }
        }
    }

    Ok(OdeSolution {
        dim,
        t0,
        t_end: t,
        steps,
        y_end: y,
        n_accepted,
        n_rejected,
    })
}
