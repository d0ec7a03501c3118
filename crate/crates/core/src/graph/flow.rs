//! Parabolic relaxation `∂_t u = g^{ij}u_ij − ½(x·Du − u)` with Dirichlet data.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::{graph_metric, inverse_graph_metric, GridField, StencilOrder};
use crate::error::{Error, Result};
use crate::grassmann::{self, OrientedFrame};
use crate::linalg::{self, BandedMatrix};

/// How the explicit time step is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepPolicy {
    Fixed(f64),
    /// `dt = c · h² / 2n`.
    Cfl(f64),
}

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    /// Forward Euler.
    Explicit(StepPolicy),
    /// Backward Euler with coefficients `g^{ij}` frozen at the old state:
    /// `(1/dt − L_u) u_new = u/dt`, solved by banded LU.
    LinearlyImplicit { pseudo_dt: f64 },
    /// Reserved; returns [`Error::Unsupported`].
    Newton,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub scheme: Scheme,
    pub max_steps: usize,
    /// Stop when the sup-norm of the residual over all evolved nodes drops
    /// below this value.
    pub threshold: f64,
    pub order: StencilOrder,
    /// Record a trace sample every this many steps (and at the last step).
    pub sample_every: usize,
    /// Divergence is declared once `sup |u|` exceeds this bound.
    pub blowup: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            scheme: Scheme::Explicit(StepPolicy::Cfl(0.45)),
            max_steps: 200_000,
            threshold: 1e-8,
            order: StencilOrder::Second,
            sample_every: 100,
            blowup: 1e6,
        }
    }
}

impl SolverConfig {
    /// The linearly implicit scheme with pseudo-time step 10³.
    pub fn implicit() -> Self {
        SolverConfig {
            scheme: Scheme::LinearlyImplicit { pseudo_dt: 1e3 },
            max_steps: 500,
            sample_every: 1,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let step_ok = match self.scheme {
            Scheme::Explicit(StepPolicy::Fixed(dt)) => dt > 0.0 && dt.is_finite(),
            Scheme::Explicit(StepPolicy::Cfl(c)) => c > 0.0 && c.is_finite(),
            Scheme::LinearlyImplicit { pseudo_dt } => pseudo_dt > 0.0 && pseudo_dt.is_finite(),
            Scheme::Newton => true,
        };
        if !step_ok {
            return Err(Error::invalid("time step must be positive"));
        }
        if !(self.threshold > 0.0) {
            return Err(Error::invalid("convergence threshold must be positive"));
        }
        if self.sample_every == 0 {
            return Err(Error::invalid("sample interval must be positive"));
        }
        Ok(())
    }
}

/// One telemetry record.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSample {
    pub step: usize,
    pub time: f64,
    pub sup_slope: f64,
    pub sup_residual: f64,
    pub sup_b2: f64,
    pub min_w: f64,
    /// `min ⟨ν, ε_{n+1}⟩` for hypersurfaces.
    pub min_pole_dot: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FlowTrace {
    pub samples: Vec<FlowSample>,
    pub converged: bool,
    pub steps: usize,
    pub final_residual: f64,
}

impl FlowTrace {
    /// Whether recorded sup-slopes never increase by more than `tol`
    /// (relative).
    pub fn slope_non_increasing(&self, tol: f64) -> bool {
        self.samples
            .windows(2)
            .all(|w| w[1].sup_slope <= w[0].sup_slope * (1.0 + tol))
    }

    pub fn times_increasing(&self) -> bool {
        self.samples.windows(2).all(|w| w[1].time > w[0].time)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FlowError {
    #[error("relaxation diverged at step {step}: sup |u| = {sup:e}")]
    Diverged { step: usize, sup: f64, trace: FlowTrace },
    #[error(transparent)]
    Core(#[from] Error),
}

impl FlowError {
    pub fn trace(&self) -> Option<&FlowTrace> {
        match self {
            FlowError::Diverged { trace, .. } => Some(trace),
            FlowError::Core(_) => None,
        }
    }
}

/// Residual at every non-boundary node (boundary entries are zero).
fn residual_all(u: &GridField, order: StencilOrder) -> Result<Vec<f64>> {
    let m = u.m();
    let mut r = vec![0.0; u.values().len()];
    for k in 0..u.node_count() {
        if !u.is_boundary(k) {
            let v = super::node_residual(u, k, order)?;
            r[k * m..(k + 1) * m].copy_from_slice(&v);
        }
    }
    Ok(r)
}

fn sample(u: &GridField, order: StencilOrder, step: usize, time: f64, sup_residual: f64) -> Result<FlowSample> {
    let reference = OrientedFrame::reference(u.n(), u.m());
    let pole = crate::linalg::unit(u.n() + 1, u.n());
    let mut s = FlowSample {
        step,
        time,
        sup_slope: 0.0,
        sup_residual,
        sup_b2: 0.0,
        min_w: f64::INFINITY,
        min_pole_dot: None,
    };
    let mut min_dot = f64::INFINITY;
    for k in u.interior(order) {
        let (du, _) = u.derivatives(k, order)?;
        s.sup_slope = s.sup_slope.max(graph_metric(&du, u.n()).determinant().sqrt());
        let pf = u.point_frame(k, order)?;
        s.sup_b2 = s.sup_b2.max(pf.b_norm_sq());
        s.min_w = s.min_w.min(grassmann::w_product(&pf.gauss_map(), &reference)?);
        if u.m() == 1 {
            min_dot = min_dot.min(linalg::dot(&pf.normal[0], &pole));
        }
    }
    if u.m() == 1 {
        s.min_pole_dot = Some(min_dot);
    }
    Ok(s)
}

/// Since `g = I + DuᵀDu ≥ I`, the eigenvalues of `g^{ij}` never exceed one
/// and the stable step depends only on the grid.
fn cfl_step(u: &GridField, c: f64, order: StencilOrder) -> f64 {
    let n = u.n();
    let h = (0..n).map(|a| u.spacing(a)).fold(f64::INFINITY, f64::min);
    // The five-point second difference has a spectral radius 4/3 larger.
    let scale = match order {
        StencilOrder::Second => 1.0,
        StencilOrder::Fourth => 0.75,
    };
    scale * c * h * h / (2.0 * n as f64)
}

/// One frozen-coefficient backward Euler step.
fn implicit_step(u: &mut GridField, order: StencilOrder, dt: f64) -> Result<()> {
    let n = u.n();
    let m = u.m();
    let count = u.node_count();
    let reach = order.reach();
    let band: usize = (0..n).map(|a| reach * u.strides[a]).sum();
    let mut mat = BandedMatrix::zeros(count, band, band);
    let mut rhs = vec![vec![0.0; count]; m];
    for k in 0..count {
        if u.is_boundary(k) {
            mat.add(k, k, 1.0);
            for al in 0..m {
                rhs[al][k] = u.value(k)[al];
            }
            continue;
        }
        let o = u.order_at(k, order);
        let (du, _) = u.derivatives(k, order)?;
        let ginv = inverse_graph_metric(&du, n);
        let x = u.coords(k);
        mat.add(k, k, 1.0 / dt - 0.5);
        for i in 0..n {
            for j in 0..n {
                for (col, w) in u.d2_weights(k, i, j, o) {
                    mat.add(k, col, -ginv[(i, j)] * w);
                }
            }
            for (col, w) in u.d1_weights(k, i, o) {
                mat.add(k, col, 0.5 * x[i] * w);
            }
        }
        for al in 0..m {
            rhs[al][k] = u.value(k)[al] / dt;
        }
    }
    mat.factor()?;
    for (al, b) in rhs.iter_mut().enumerate() {
        mat.solve_in_place(b);
        for k in 0..count {
            u.values_mut()[k * m + al] = b[k];
        }
    }
    Ok(())
}

/// Evolves `u0` until the residual drops below the threshold or the step
/// budget runs out. Boundary nodes are held at their Dirichlet values.
pub fn relax_flow(u0: &GridField, cfg: &SolverConfig) -> core::result::Result<(GridField, FlowTrace), FlowError> {
    cfg.validate()?;
    if cfg.scheme == Scheme::Newton {
        return Err(Error::Unsupported("Newton relaxation is reserved but not implemented").into());
    }
    let order = cfg.order;
    let mut u = u0.clone();
    u.apply_boundary();
    let mut trace = FlowTrace::default();
    let mut time = 0.0;
    let m = u.m();
    for step in 0..=cfg.max_steps {
        let r = residual_all(&u, order)?;
        let sup = r.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
        let done = sup < cfg.threshold;
        let last = done || step == cfg.max_steps;
        if step % cfg.sample_every == 0 || last {
            trace.samples.push(sample(&u, order, step, time, sup)?);
        }
        trace.steps = step;
        trace.final_residual = sup;
        if done {
            trace.converged = true;
            break;
        }
        if last {
            break;
        }
        let dt = match cfg.scheme {
            Scheme::Explicit(policy) => {
                let dt = match policy {
                    StepPolicy::Fixed(dt) => dt,
                    StepPolicy::Cfl(c) => cfl_step(&u, c, order),
                };
                let vals = u.values_mut();
                for k in 0..vals.len() / m {
                    for al in 0..m {
                        vals[k * m + al] += dt * r[k * m + al];
                    }
                }
                dt
            }
            Scheme::LinearlyImplicit { pseudo_dt } => {
                implicit_step(&mut u, order, pseudo_dt)?;
                pseudo_dt
            }
            Scheme::Newton => unreachable!(),
        };
        time += dt;
        let sup_u = u.sup_abs();
        if !(sup_u <= cfg.blowup) {
            trace.samples.push(FlowSample {
                step: step + 1,
                time,
                sup_slope: f64::NAN,
                sup_residual: f64::NAN,
                sup_b2: f64::NAN,
                min_w: f64::NAN,
                min_pole_dot: None,
            });
            trace.steps = step + 1;
            return Err(FlowError::Diverged {
                step: step + 1,
                sup: sup_u,
                trace,
            });
        }
    }
    Ok((u, trace))
}
