//! Embedded Dormand–Prince 5(4) integrator with proportional-integral
//! step control and cubic Hermite dense output.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::norm;
use crate::system::SinkSystem;

/// Integration options. `fixed_step` disables error control entirely
/// (used by the order-verification check).
#[derive(Clone, Debug)]
pub struct IntegrateOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Radius of the validity ball; leaving it aborts with an escape
    /// error. Use `f64::INFINITY` to disable.
    pub ball_radius: f64,
    pub max_steps: usize,
    pub fixed_step: Option<f64>,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-13,
            ball_radius: 0.25,
            max_steps: 2_000_000,
            fixed_step: None,
        }
    }
}

impl IntegrateOptions {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, ..Self::default() }
    }

    pub fn with_ball(mut self, radius: f64) -> Self {
        self.ball_radius = radius;
        self
    }
}

/// A computed trajectory: accepted nodes with states and derivatives,
/// evaluable between nodes by cubic Hermite interpolation.
#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    derivs: Vec<Vec<f64>>,
    rtol: f64,
    atol: f64,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().unwrap()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    /// Dense evaluation. Reproduces stored states exactly at the nodes;
    /// cubic Hermite between them.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let n = self.times.len();
        assert!(n > 0, "empty trajectory");
        if t <= self.times[0] {
            return self.states[0].clone();
        }
        if t >= self.times[n - 1] {
            return self.states[n - 1].clone();
        }
        let seg = match self.times.partition_point(|&x| x <= t) {
            0 => 0,
            k => k - 1,
        };
        let (t0, t1) = (self.times[seg], self.times[seg + 1]);
        if t == t0 {
            return self.states[seg].clone();
        }
        let h = t1 - t0;
        let theta = (t - t0) / h;
        let (y0, y1) = (&self.states[seg], &self.states[seg + 1]);
        let (f0, f1) = (&self.derivs[seg], &self.derivs[seg + 1]);
        let t2 = theta * theta;
        let t3 = t2 * theta;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + theta;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        (0..y0.len())
            .map(|i| h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i])
            .collect()
    }

    /// Norms of the stored states.
    pub fn norms(&self) -> Vec<f64> {
        self.states.iter().map(|s| norm(s)).collect()
    }

    /// CSV export: header `t,x1,…,xn`, one row per node.
    pub fn to_csv(&self) -> String {
        let n = self.dim();
        let mut out = String::from("t");
        for i in 1..=n {
            out.push_str(&format!(",x{i}"));
        }
        out.push('\n');
        for (t, s) in self.times.iter().zip(&self.states) {
            out.push_str(&format!("{t:.12e}"));
            for v in s {
                out.push_str(&format!(",{v:.12e}"));
            }
            out.push('\n');
        }
        out
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 6] = [
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate `ẋ = Ax + b(x)` from `x0` over `[0, t_end]`.
pub fn integrate(
    sys: &SinkSystem,
    x0: &[f64],
    t_end: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    integrate_rhs(|x| sys.rhs(x), x0, t_end, opts)
}

/// Integrate a generic autonomous right-hand side.
pub fn integrate_rhs(
    f: impl Fn(&[f64]) -> Vec<f64>,
    x0: &[f64],
    t_end: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    assert!(t_end > 0.0, "t_end must be positive");
    if norm(x0) > opts.ball_radius {
        return Err(Error::Escape { time: 0.0, radius: opts.ball_radius });
    }
    let n = x0.len();
    let mut t = 0.0;
    let mut y = x0.to_vec();
    let mut dy = f(&y);
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![y.clone()],
        derivs: vec![dy.clone()],
        rtol: opts.rtol,
        atol: opts.atol,
    };

    let mut h = match opts.fixed_step {
        Some(h) => h,
        None => initial_step(&y, &dy, t_end, opts),
    };
    let mut err_prev: f64 = 1.0;
    let h_min = t_end * 1e-14;
    let mut k = [const { Vec::new() }; 7];

    for _ in 0..opts.max_steps {
        if t >= t_end * (1.0 - 1e-15) {
            return Ok(traj);
        }
        let h_step = h.min(t_end - t);
        // Stage computations; k[0] reuses the stored derivative (FSAL).
        k[0] = dy.clone();
        for s in 1..7 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s - 1][j];
                if a != 0.0 {
                    for i in 0..n {
                        ys[i] += h_step * a * kj[i];
                    }
                }
            }
            let _ = C; // stage times unused: the system is autonomous
            k[s] = f(&ys);
        }
        let mut y5 = y.clone();
        let mut e = vec![0.0; n];
        for (j, kj) in k.iter().enumerate() {
            for i in 0..n {
                y5[i] += h_step * B5[j] * kj[i];
                e[i] += h_step * (B5[j] - B4[j]) * kj[i];
            }
        }

        let accept = if opts.fixed_step.is_some() {
            true
        } else {
            let mut err_sq = 0.0;
            for i in 0..n {
                let sc = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
                err_sq += (e[i] / sc) * (e[i] / sc);
            }
            let err = (err_sq / n as f64).sqrt().max(1e-30);
            if err <= 1.0 {
                // PI controller on acceptance.
                let fac = 0.9 * err.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
                err_prev = err;
                h = (h_step * fac.clamp(0.2, 5.0)).max(h_min);
                true
            } else {
                h = h_step * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                if h < h_min {
                    return Err(Error::Stiffness { time: t });
                }
                false
            }
        };

        if accept {
            // k7 = f(t+h, y5) is the next step's first stage.
            t += h_step;
            y = y5;
            dy = k[6].clone();
            traj.times.push(t);
            traj.states.push(y.clone());
            traj.derivs.push(dy.clone());
            if norm(&y) > opts.ball_radius {
                return Err(Error::Escape { time: t, radius: opts.ball_radius });
            }
        }
    }
    Err(Error::Stiffness { time: t })
}

fn initial_step(y: &[f64], dy: &[f64], t_end: f64, opts: &IntegrateOptions) -> f64 {
    let d0 = norm(y);
    let d1 = norm(dy);
    let guess = if d1 > 1e-12 {
        0.01 * (d0.max(opts.atol)) / d1
    } else {
        t_end * 1e-3
    };
    guess.min(t_end * 0.1).max(t_end * 1e-10)
}
