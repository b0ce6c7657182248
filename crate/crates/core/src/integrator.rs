//! One-step Lie group variational integrator on unit dual quaternions.
//!
//! The incremental pose `f_k = p_k† ⊗ p_{k+1}` is parametrized by six free
//! variables `(Φ, Ψ)`:
//!
//! ```text
//! f_a = [ sqrt(1 - |Φ|²) ; Φ ]
//! f_b = [ -(Ψ·Φ) / sqrt(1 - |Φ|²) ; Ψ ]
//! ```
//!
//! which satisfies both unit constraints identically, so `p_{k+1} = p_k ⊗ f_k`
//! stays on the group without any reprojection. Each step solves the discrete
//! momentum balance `A(Φ_k, Ψ_k) = α_k`, `B(Φ_k, Ψ_k) = β_k` by Newton–Raphson
//! with the analytic Jacobian.

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};

use crate::dual_quaternion::{skew, DualQuaternion, Pose};
use crate::dynamics::{condition_1, kinetic_energy, total_potential, total_wrench, world_momentum, ForceModel, InertiaMatrix6};
use crate::error::{Error, Result};
use crate::kinematics::{BodyTwist, Frame, Wrench};
use crate::quaternion::Quaternion;

/// Jacobians with a larger 1-norm condition estimate abort the step.
pub const MAX_JACOBIAN_CONDITION: f64 = 1e12;

/// Smallest backtracking factor tried before giving up on keeping `|Φ| < 1`.
const MIN_DAMPING: f64 = 1.0 / 1024.0;

/// The six unknowns of one step: `Φ` (rotational) and `Ψ` (translational).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepVariables {
    pub phi: Vector3<f64>,
    pub psi: Vector3<f64>,
}

impl StepVariables {
    pub fn new(phi: Vector3<f64>, psi: Vector3<f64>) -> Result<Self> {
        let s = Self { phi, psi };
        s.check()?;
        Ok(s)
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_vector(v: &Vector6<f64>) -> Result<Self> {
        Self::new(v.fixed_rows::<3>(0).into(), v.fixed_rows::<3>(3).into())
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        let (a, b) = (self.phi, self.psi);
        Vector6::new(a.x, a.y, a.z, b.x, b.y, b.z)
    }

    fn check(&self) -> Result<()> {
        let n = self.phi.norm();
        if n < 1.0 && self.psi.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::StepTooLarge { phi_norm: n })
        }
    }

    /// `sqrt(1 - |Φ|²)`, the scalar part of `f_a`.
    fn scalar(&self) -> f64 {
        (1.0 - self.phi.norm_squared()).sqrt()
    }

    /// The incremental pose `f` this step applies.
    pub fn to_pose(&self) -> Result<Pose> {
        self.check()?;
        Ok(self.to_pose_unchecked())
    }

    fn to_pose_unchecked(&self) -> Pose {
        let c = self.scalar();
        let real = Quaternion::from_scalar_vector(c, &self.phi);
        let dual = Quaternion::from_scalar_vector(-self.psi.dot(&self.phi) / c, &self.psi);
        Pose::new_unchecked(DualQuaternion::new(real, dual))
    }
}

pub fn step_to_dual_quaternion(s: &StepVariables) -> Result<Pose> {
    s.to_pose()
}

/// Momentum terms shared by the residual (`sign = 1`) and the right-hand
/// side (`sign = -1`, the conjugated previous step).
fn momentum_terms(s: &StepVariables, m: &InertiaMatrix6, sign: f64) -> (Vector3<f64>, Vector3<f64>) {
    let (phi, psi) = (s.phi, s.psi);
    let c = s.scalar();
    let d = -psi.dot(&phi) / c;
    let w = m.m21 * phi + m.m22 * psi;
    let u = m.m11 * phi + m.m12 * psi;
    let a = w * d + psi.cross(&w) * sign + u * c + phi.cross(&u) * sign;
    let b = w * c + phi.cross(&w) * sign;
    (a, b)
}

/// `(A(Φ, Ψ), B(Φ, Ψ))`.
pub fn residual(s: &StepVariables, m: &InertiaMatrix6) -> Result<(Vector3<f64>, Vector3<f64>)> {
    s.check()?;
    Ok(momentum_terms(s, m, 1.0))
}

/// `(α_k, β_k)` from the previous step and the body wrench acting at step `k`.
/// Torque enters the rotational equation, force the translational one.
pub fn rhs(prev: &StepVariables, m: &InertiaMatrix6, wrench: &Wrench, h: f64) -> Result<(Vector3<f64>, Vector3<f64>)> {
    prev.check()?;
    wrench.require_frame(Frame::Body)?;
    let (a, b) = momentum_terms(prev, m, -1.0);
    let k = 0.5 * h * h;
    Ok((a + wrench.torque * k, b + wrench.force * k))
}

fn assemble(daa: Matrix3<f64>, dab: Matrix3<f64>, dba: Matrix3<f64>, dbb: Matrix3<f64>) -> Matrix6<f64> {
    let mut j = Matrix6::zeros();
    j.fixed_view_mut::<3, 3>(0, 0).copy_from(&daa);
    j.fixed_view_mut::<3, 3>(0, 3).copy_from(&dab);
    j.fixed_view_mut::<3, 3>(3, 0).copy_from(&dba);
    j.fixed_view_mut::<3, 3>(3, 3).copy_from(&dbb);
    j
}

/// Gradient of `-(Ψ·Φ)/sqrt(1-|Φ|²)` with respect to `Φ`.
fn dual_scalar_gradient(phi: &Vector3<f64>, psi: &Vector3<f64>, c: f64) -> Vector3<f64> {
    (-psi - phi.cross(&phi.cross(psi))) / (c * c * c)
}

/// Analytic Jacobian valid for any inertia matrix.
pub fn jacobian_general(s: &StepVariables, m: &InertiaMatrix6) -> Result<Matrix6<f64>> {
    s.check()?;
    let (phi, psi) = (s.phi, s.psi);
    let c = s.scalar();
    let d = -psi.dot(&phi) / c;
    let w = m.m21 * phi + m.m22 * psi;
    let u = m.m11 * phi + m.m12 * psi;
    let id = Matrix3::identity();
    let rot = id * c + skew(&phi);
    let g = dual_scalar_gradient(&phi, &psi, c);

    let daa = w * g.transpose() + (id * d + skew(&psi)) * m.m21 - u * phi.transpose() / c - skew(&u) + rot * m.m11;
    let dab = -w * phi.transpose() / c - skew(&w) + m.m22 * d + skew(&psi) * m.m22 + rot * m.m12;
    let dba = -w * phi.transpose() / c - skew(&w) + rot * m.m21;
    let dbb = rot * m.m22;
    Ok(assemble(daa, dab, dba, dbb))
}

/// Reduced Jacobian for a reference point at the center of mass
/// (`M12 = M21 = 0`, isotropic `M22`).
pub fn jacobian_centered(s: &StepVariables, m: &InertiaMatrix6) -> Result<Matrix6<f64>> {
    s.check()?;
    let (phi, psi) = (s.phi, s.psi);
    let c = s.scalar();
    let d = -psi.dot(&phi) / c;
    let lin = m.m22 * psi;
    let ang = m.m11 * phi;
    let rot = Matrix3::identity() * c + skew(&phi);
    let g = dual_scalar_gradient(&phi, &psi, c);

    let daa = lin * g.transpose() - ang * phi.transpose() / c - skew(&ang) + rot * m.m11;
    let dab = -lin * phi.transpose() / c + m.m22 * d;
    let dba = -lin * phi.transpose() / c - skew(&lin);
    let dbb = rot * m.m22;
    Ok(assemble(daa, dab, dba, dbb))
}

/// `∂(A, B)/∂(Φ, Ψ)`, using the reduced form when the inertia allows it.
pub fn jacobian(s: &StepVariables, m: &InertiaMatrix6) -> Result<Matrix6<f64>> {
    if m.is_centered() {
        jacobian_centered(s, m)
    } else {
        jacobian_general(s, m)
    }
}

/// `(Φ, Ψ) ≈ (h/2) χ_B`.
pub fn initial_guess(twist: &BodyTwist, h: f64) -> Result<StepVariables> {
    StepVariables::new(twist.angular * (0.5 * h), twist.linear * (0.5 * h))
}

/// `χ = (2/h) M⁻¹ [A; B]`.
pub fn retrieve_twist(s: &StepVariables, m: &InertiaMatrix6, h: f64) -> Result<BodyTwist> {
    let (a, b) = residual(s, m)?;
    Ok(m.twist_from_momentum(&(stack(&a, &b) * (2.0 / h))))
}

/// `p_{k+1} = p_k ⊗ f_k`. No renormalization.
pub fn advance_pose(p: &Pose, s: &StepVariables) -> Pose {
    p.mul(&s.to_pose_unchecked())
}

fn stack(a: &Vector3<f64>, b: &Vector3<f64>) -> Vector6<f64> {
    Vector6::new(a.x, a.y, a.z, b.x, b.y, b.z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WarmStart {
    /// `M⁻¹ [α; β]`: the twist implied by the incoming momentum, times `h/2`.
    #[default]
    MomentumEstimate,
    /// The previous step's variables.
    Previous,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Time step `h`, seconds.
    pub step: f64,
    /// Bound on the ∞-norm of `(A - α, B - β)`.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub warm_start: WarmStart,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            step: 1e-3,
            tolerance: 1e-12,
            max_iterations: 20,
            warm_start: WarmStart::default(),
        }
    }
}

impl SolverSettings {
    pub fn with_step(step: f64) -> Self {
        Self {
            step,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidSettings("time step must be positive"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidSettings("tolerance must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidSettings("max_iterations must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSolution {
    pub step: StepVariables,
    pub iterations: usize,
    pub residual_norm: f64,
}

/// Newton–Raphson on `(A, B)(s) = target`, starting from `guess`.
///
/// At least one Newton update is always taken. Updates that would leave
/// `|Φ| < 1` are halved until feasible.
pub fn solve_momentum_balance(
    target: &Vector6<f64>,
    m: &InertiaMatrix6,
    guess: StepVariables,
    settings: &SolverSettings,
) -> Result<StepSolution> {
    guess.check()?;
    let eval = |s: &StepVariables| {
        let (a, b) = momentum_terms(s, m, 1.0);
        stack(&a, &b) - target
    };
    let mut x = guess;
    let mut r = eval(&x);
    let mut iterations = 0;
    loop {
        if iterations == settings.max_iterations {
            return Err(Error::Divergence {
                iterations,
                residual_norm: r.amax(),
            });
        }
        let j = jacobian(&x, m)?;
        let lu = j.full_piv_lu();
        let condition = lu
            .try_inverse()
            .map(|inv| condition_1(&j, &inv))
            .unwrap_or(f64::INFINITY);
        if !(condition <= MAX_JACOBIAN_CONDITION) {
            return Err(Error::SingularJacobian { condition });
        }
        let dx = lu.solve(&(-r)).ok_or(Error::SingularJacobian { condition })?;
        iterations += 1;

        let mut damping = 1.0;
        let next = loop {
            let candidate = StepVariables {
                phi: x.phi + dx.fixed_rows::<3>(0) * damping,
                psi: x.psi + dx.fixed_rows::<3>(3) * damping,
            };
            if candidate.check().is_ok() {
                break candidate;
            }
            damping *= 0.5;
            if damping < MIN_DAMPING {
                return Err(Error::StepTooLarge {
                    phi_norm: (x.phi + dx.fixed_rows::<3>(0)).norm(),
                });
            }
        };
        x = next;
        r = eval(&x);
        let norm = r.amax();
        if !norm.is_finite() {
            return Err(Error::Divergence {
                iterations,
                residual_norm: norm,
            });
        }
        if norm <= settings.tolerance {
            return Ok(StepSolution {
                step: x,
                iterations,
                residual_norm: norm,
            });
        }
    }
}

/// Solves for `s_k` given `s_{k-1}` and the body wrench at step `k`.
pub fn solve_step(
    prev: &StepVariables,
    m: &InertiaMatrix6,
    wrench: &Wrench,
    settings: &SolverSettings,
) -> Result<StepSolution> {
    settings.validate()?;
    let (alpha, beta) = rhs(prev, m, wrench, settings.step)?;
    let target = stack(&alpha, &beta);
    let guess = match settings.warm_start {
        WarmStart::Previous => *prev,
        WarmStart::MomentumEstimate => StepVariables::from_vector(&(m.inverse() * target)).unwrap_or(*prev),
    };
    solve_momentum_balance(&target, m, guess, settings)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    pub kinetic_energy: f64,
    pub potential_energy: f64,
    /// World-frame angular momentum about the world origin.
    pub angular_momentum: Vector3<f64>,
    pub linear_momentum: Vector3<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub unit_norm_error: f64,
    pub orthogonality_error: f64,
}

impl Diagnostics {
    pub fn total_energy(&self) -> f64 {
        self.kinetic_energy + self.potential_energy
    }
}

/// State at time `t_k`: the pose, the step taking it to `p_{k+1}`, and the
/// body twist at `t_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorState {
    pub index: usize,
    pub time: f64,
    pub pose: Pose,
    pub step: StepVariables,
    pub twist: BodyTwist,
    pub diagnostics: Diagnostics,
}

/// Sequential DQVI run over a fixed force list.
///
/// The twist reported at `t_k` is `(2/h) M⁻¹ ([A; B](s_k) - (h²/4) τ_k)`,
/// the momentum split evenly around the impulse applied at `t_k`; for
/// wrench-free steps it equals [`retrieve_twist`]. The first step is seeded
/// from the initial twist with the same split.
pub struct Simulation<'a> {
    inertia: &'a InertiaMatrix6,
    forces: &'a [Box<dyn ForceModel>],
    settings: SolverSettings,
    state: IntegratorState,
}

impl<'a> Simulation<'a> {
    pub fn new(
        pose: Pose,
        twist: BodyTwist,
        inertia: &'a InertiaMatrix6,
        forces: &'a [Box<dyn ForceModel>],
        settings: SolverSettings,
    ) -> Result<Self> {
        Self::start(pose, twist, inertia, forces, settings).map_err(|e| e.at_step(0))
    }

    fn start(
        pose: Pose,
        twist: BodyTwist,
        inertia: &'a InertiaMatrix6,
        forces: &'a [Box<dyn ForceModel>],
        settings: SolverSettings,
    ) -> Result<Self> {
        settings.validate()?;
        let h = settings.step;
        let guess = initial_guess(&twist, h)?;
        let wrench = total_wrench(forces, &pose, &twist, 0.0)?;
        let target = inertia.momentum(&twist) * (0.5 * h) + wrench.to_vector() * (0.25 * h * h);
        let solution = solve_momentum_balance(&target, inertia, guess, &settings)?;
        let state = Self::make_state(inertia, forces, &settings, 0, pose, &solution, &wrench);
        Ok(Self {
            inertia,
            forces,
            settings,
            state,
        })
    }

    fn make_state(
        inertia: &InertiaMatrix6,
        forces: &[Box<dyn ForceModel>],
        settings: &SolverSettings,
        index: usize,
        pose: Pose,
        solution: &StepSolution,
        wrench: &Wrench,
    ) -> IntegratorState {
        let h = settings.step;
        let (a, b) = momentum_terms(&solution.step, inertia, 1.0);
        let momentum = (stack(&a, &b) - wrench.to_vector() * (0.25 * h * h)) * (2.0 / h);
        let twist = inertia.twist_from_momentum(&momentum);
        let (angular_momentum, linear_momentum) = world_momentum(&pose, &momentum);
        IntegratorState {
            index,
            time: index as f64 * h,
            pose,
            step: solution.step,
            twist,
            diagnostics: Diagnostics {
                kinetic_energy: kinetic_energy(inertia, &twist),
                potential_energy: total_potential(forces, &pose),
                angular_momentum,
                linear_momentum,
                residual_norm: solution.residual_norm,
                iterations: solution.iterations,
                unit_norm_error: pose.unit_norm_error(),
                orthogonality_error: pose.orthogonality_error(),
            },
        }
    }

    pub fn state(&self) -> &IntegratorState {
        &self.state
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.settings
    }

    /// Advances one step and returns the new state.
    pub fn step(&mut self) -> Result<&IntegratorState> {
        let index = self.state.index + 1;
        self.advance(index).map_err(|e| e.at_step(index))?;
        Ok(&self.state)
    }

    fn advance(&mut self, index: usize) -> Result<()> {
        let prev = &self.state;
        let pose = advance_pose(&prev.pose, &prev.step);
        let time = index as f64 * self.settings.step;
        let wrench = total_wrench(self.forces, &pose, &prev.twist, time)?;
        let solution = solve_step(&prev.step, self.inertia, &wrench, &self.settings)?;
        self.state = Self::make_state(self.inertia, self.forces, &self.settings, index, pose, &solution, &wrench);
        Ok(())
    }
}

/// Runs `n_steps` steps and returns all `n_steps + 1` states.
pub fn simulate(
    pose: Pose,
    twist: BodyTwist,
    inertia: &InertiaMatrix6,
    forces: &[Box<dyn ForceModel>],
    settings: SolverSettings,
    n_steps: usize,
) -> Result<Vec<IntegratorState>> {
    let mut sim = Simulation::new(pose, twist, inertia, forces, settings)?;
    let mut states = Vec::with_capacity(n_steps + 1);
    states.push(*sim.state());
    for _ in 0..n_steps {
        states.push(*sim.step()?);
    }
    Ok(states)
}
