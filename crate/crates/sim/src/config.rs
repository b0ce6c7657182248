//! Scenario files.
//!
//! A scenario is a TOML document with the tables `body`, `initial`, `forces`,
//! `run` and `output`. All quantities are SI: kg, m, s, rad, N, N·m. Vectors
//! are expressed in body axes unless a field says otherwise. See the
//! `scenarios/` directory for complete examples.

use std::path::PathBuf;

use dqvi::dynamics::{
    build_inertia, build_inertia_raw, gravity_potential, spring_potential, ConstantWrench, ForceModel, LinearDamping,
};
use dqvi::kinematics::{screw_compose, ScrewParameters};
use dqvi::{BodyTwist, InertiaMatrix6, Pose, Quaternion, SolverSettings, UnitQuaternion, WarmStart, Wrench};
use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Accepted deviation of the configured rotation from unit norm. The value
/// is normalized when the scenario is built.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub body: BodyConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub forces: Vec<ForceConfig>,
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Either `mass` + `inertia` (3×3 about the reference point) or a raw 6×6
/// `inertia_raw`, never both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inertia: Option<[[f64; 3]; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inertia_raw: Option<[[f64; 6]; 6]>,
    /// Center of mass seen from the reference point.
    #[serde(default)]
    pub center_of_mass: [f64; 3],
}

/// Initial pose and twist. The pose is `rotation` (w, x, y, z) plus
/// `translation` (world), or a `screw` from the identity. The twist is given
/// as body velocities or as body momenta; momenta are converted to
/// velocities when the file is parsed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translation: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub screw: Option<ScrewConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angular_velocity: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear_velocity: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angular_momentum: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear_momentum: Option<[f64; 3]>,
}

/// Screw motion with unit `axis`, `moment = point × axis`, rotation `angle`
/// and translation `displacement` along the axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScrewConfig {
    pub axis: [f64; 3],
    #[serde(default)]
    pub moment: [f64; 3],
    pub angle: f64,
    #[serde(default)]
    pub displacement: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameConfig {
    #[default]
    Body,
    World,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ForceConfig {
    /// Uniform field acting at the center of mass; needs `body.mass`.
    Gravity {
        #[serde(default = "standard_gravity")]
        acceleration: [f64; 3],
    },
    /// Spring from a world `anchor` to a body `attachment` point.
    Spring {
        anchor: [f64; 3],
        attachment: [f64; 3],
        stiffness: f64,
        #[serde(default)]
        rest_length: f64,
    },
    ConstantWrench {
        #[serde(default)]
        frame: FrameConfig,
        #[serde(default)]
        torque: [f64; 3],
        #[serde(default)]
        force: [f64; 3],
    },
    /// Diagonal damping `-D χ_B`, coefficients ordered angular first.
    LinearDamping { coefficients: [f64; 6] },
}

fn standard_gravity() -> [f64; 3] {
    [0.0, 0.0, -9.81]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum IntegratorKind {
    #[default]
    Dqvi,
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_step")]
    pub h: f64,
    pub steps: usize,
    #[serde(default)]
    pub integrator: IntegratorKind,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
}

fn default_step() -> f64 {
    1e-3
}

fn default_tolerance() -> f64 {
    1e-12
}

fn default_max_iterations() -> usize {
    20
}

/// Column groups of the trajectory table. `t` is always written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldGroup {
    Pose,
    Twist,
    Energy,
    Momentum,
    Solver,
}

impl FieldGroup {
    pub const ALL: [FieldGroup; 5] = [
        FieldGroup::Pose,
        FieldGroup::Twist,
        FieldGroup::Energy,
        FieldGroup::Momentum,
        FieldGroup::Solver,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_path")]
    pub path: PathBuf,
    #[serde(default = "default_fields")]
    pub fields: Vec<FieldGroup>,
    #[serde(default = "default_stride")]
    pub stride: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            path: default_path(),
            fields: default_fields(),
            stride: default_stride(),
        }
    }
}

fn default_path() -> PathBuf {
    PathBuf::from("trajectory.csv")
}

fn default_fields() -> Vec<FieldGroup> {
    FieldGroup::ALL.to_vec()
}

fn default_stride() -> usize {
    1
}

/// Command-line values that replace the corresponding config entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub output: Option<PathBuf>,
    pub h: Option<f64>,
    pub steps: Option<usize>,
    pub tolerance: Option<f64>,
    pub max_iterations: Option<usize>,
    pub integrator: Option<IntegratorKind>,
    pub stride: Option<usize>,
}

/// Parses and validates a scenario, filling every default.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let mut config: ScenarioConfig = toml::from_str(text).map_err(|e| SimError::config(e.to_string()))?;
    config.normalize()?;
    config.validate()?;
    Ok(config)
}

impl ScenarioConfig {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| SimError::config(e.to_string()))
    }

    /// Applies the overrides and validates the result.
    pub fn with_overrides(mut self, o: &Overrides) -> Result<Self> {
        if let Some(p) = &o.output {
            self.output.path = p.clone();
        }
        if let Some(h) = o.h {
            self.run.h = h;
        }
        if let Some(n) = o.steps {
            self.run.steps = n;
        }
        if let Some(t) = o.tolerance {
            self.run.tolerance = t;
        }
        if let Some(k) = o.max_iterations {
            self.run.max_iterations = k;
        }
        if let Some(i) = o.integrator {
            self.run.integrator = i;
        }
        if let Some(s) = o.stride {
            self.output.stride = s;
        }
        self.validate()?;
        Ok(self)
    }

    /// Fills the pose and velocity defaults and converts momenta to velocities.
    fn normalize(&mut self) -> Result<()> {
        let init = &mut self.initial;
        if init.screw.is_none() {
            init.rotation.get_or_insert([1.0, 0.0, 0.0, 0.0]);
            init.translation.get_or_insert([0.0; 3]);
        }
        let has_momentum = init.angular_momentum.is_some() || init.linear_momentum.is_some();
        let has_velocity = init.angular_velocity.is_some() || init.linear_velocity.is_some();
        if has_momentum && has_velocity {
            return Err(SimError::config(
                "initial: give either velocities or momenta, not both",
            ));
        }
        if has_momentum {
            let inertia = self.body.inertia()?;
            let h = v3(&init.angular_momentum.take().unwrap_or_default());
            let p = v3(&init.linear_momentum.take().unwrap_or_default());
            let twist = inertia.twist_from_momentum(&Vector6::new(h.x, h.y, h.z, p.x, p.y, p.z));
            init.angular_velocity = Some(twist.angular.into());
            init.linear_velocity = Some(twist.linear.into());
        } else {
            init.angular_velocity.get_or_insert([0.0; 3]);
            init.linear_velocity.get_or_insert([0.0; 3]);
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.body.inertia()?;
        self.initial.pose()?;
        for f in &self.forces {
            f.validate(&self.body)?;
        }
        let run = &self.run;
        if !(run.h > 0.0 && run.h.is_finite()) {
            return Err(SimError::config(format!("run.h must be positive, got {}", run.h)));
        }
        if run.steps == 0 {
            return Err(SimError::config("run.steps must be at least 1"));
        }
        if !(run.tolerance > 0.0 && run.tolerance.is_finite()) {
            return Err(SimError::config("run.tolerance must be positive"));
        }
        if run.max_iterations == 0 {
            return Err(SimError::config("run.max_iterations must be at least 1"));
        }
        if self.output.stride == 0 {
            return Err(SimError::config("output.stride must be at least 1"));
        }
        let omega = self.initial.twist().angular.norm();
        let phi = 0.5 * run.h * omega;
        if !(phi < 1.0) {
            return Err(SimError::config(format!(
                "initial step estimate |Φ| = h·|ω0|/2 = {phi:.3} must be below 1 \
                 (the body may not rotate 180 degrees or more per step); reduce run.h below {:.3e}",
                2.0 / omega
            )));
        }
        Ok(())
    }

    /// Inertia, initial state, forces and solver settings ready to simulate.
    pub fn build(&self) -> Result<Scenario> {
        let settings = SolverSettings {
            step: self.run.h,
            tolerance: self.run.tolerance,
            max_iterations: self.run.max_iterations,
            warm_start: WarmStart::default(),
        };
        Ok(Scenario {
            inertia: self.body.inertia()?,
            pose: self.initial.pose()?,
            twist: self.initial.twist(),
            forces: self.forces.iter().map(|f| f.build(&self.body)).collect::<Result<_>>()?,
            settings,
            steps: self.run.steps,
            integrator: self.run.integrator,
        })
    }
}

pub struct Scenario {
    pub inertia: InertiaMatrix6,
    pub pose: Pose,
    pub twist: BodyTwist,
    pub forces: Vec<Box<dyn ForceModel>>,
    pub settings: SolverSettings,
    pub steps: usize,
    pub integrator: IntegratorKind,
}

fn v3(a: &[f64; 3]) -> Vector3<f64> {
    Vector3::from(*a)
}

fn finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(SimError::config(format!("{what} must be finite")))
    }
}

impl BodyConfig {
    pub fn inertia(&self) -> Result<InertiaMatrix6> {
        finite(&self.center_of_mass, "body.center_of_mass")?;
        match (&self.inertia, &self.inertia_raw) {
            (Some(_), Some(_)) => Err(SimError::config(
                "body: `inertia` and `inertia_raw` are both given; keep exactly one",
            )),
            (None, None) => Err(SimError::config("body: missing `inertia` (3×3) or `inertia_raw` (6×6)")),
            (Some(j), None) => {
                let mass = self
                    .mass
                    .ok_or_else(|| SimError::config("body: `mass` is required with `inertia`"))?;
                let j = Matrix3::from_fn(|r, c| j[r][c]);
                build_inertia(mass, j, v3(&self.center_of_mass))
                    .map_err(|e| SimError::config(format!("body: {e}")))
            }
            (None, Some(m)) => {
                let m = Matrix6::from_fn(|r, c| m[r][c]);
                build_inertia_raw(m).map_err(|e| SimError::config(format!("body.inertia_raw: {e}")))
            }
        }
    }
}

impl InitialConfig {
    pub fn pose(&self) -> Result<Pose> {
        if let Some(s) = &self.screw {
            if self.rotation.is_some() || self.translation.is_some() {
                return Err(SimError::config(
                    "initial: `screw` excludes `rotation` and `translation`",
                ));
            }
            finite(&[s.axis, s.moment].concat(), "initial.screw")?;
            let screw = ScrewParameters::new(v3(&s.axis), v3(&s.moment), s.angle, s.displacement)
                .map_err(|e| SimError::config(format!("initial.screw: {e}")))?;
            return Ok(screw_compose(&screw));
        }
        let r = self.rotation.unwrap_or([1.0, 0.0, 0.0, 0.0]);
        let l = self.translation.unwrap_or_default();
        finite(&r, "initial.rotation")?;
        finite(&l, "initial.translation")?;
        let q = Quaternion::from_array(r);
        if (q.norm() - 1.0).abs() > ROTATION_TOLERANCE {
            return Err(SimError::config(format!(
                "initial.rotation must be a unit quaternion (w, x, y, z); its norm is {}",
                q.norm()
            )));
        }
        let q = UnitQuaternion::new_normalize(q).map_err(|e| SimError::config(e.to_string()))?;
        Ok(Pose::from_rotation_translation(&q, &v3(&l)))
    }

    /// Body twist. Meaningful after parsing, when momenta have been converted.
    pub fn twist(&self) -> BodyTwist {
        BodyTwist::new(
            v3(&self.angular_velocity.unwrap_or_default()),
            v3(&self.linear_velocity.unwrap_or_default()),
        )
    }
}

impl ForceConfig {
    fn validate(&self, body: &BodyConfig) -> Result<()> {
        self.build(body).map(|_| ())
    }

    pub fn build(&self, body: &BodyConfig) -> Result<Box<dyn ForceModel>> {
        Ok(match self {
            ForceConfig::Gravity { acceleration } => {
                finite(acceleration, "gravity.acceleration")?;
                let mass = body
                    .mass
                    .ok_or_else(|| SimError::config("gravity needs `body.mass`"))?;
                Box::new(gravity_potential(mass, v3(acceleration), v3(&body.center_of_mass)))
            }
            ForceConfig::Spring {
                anchor,
                attachment,
                stiffness,
                rest_length,
            } => {
                finite(&[*anchor, *attachment].concat(), "spring points")?;
                if !(*stiffness >= 0.0 && stiffness.is_finite()) {
                    return Err(SimError::config("spring.stiffness must be non-negative"));
                }
                if !(*rest_length >= 0.0 && rest_length.is_finite()) {
                    return Err(SimError::config("spring.rest_length must be non-negative"));
                }
                Box::new(spring_potential(v3(anchor), v3(attachment), *stiffness, *rest_length))
            }
            ForceConfig::ConstantWrench { frame, torque, force } => {
                finite(&[*torque, *force].concat(), "constant_wrench")?;
                let (t, f) = (v3(torque), v3(force));
                let w = match frame {
                    FrameConfig::Body => Wrench::body(t, f),
                    FrameConfig::World => Wrench::world(t, f),
                };
                Box::new(ConstantWrench(w))
            }
            ForceConfig::LinearDamping { coefficients } => {
                finite(coefficients, "linear_damping.coefficients")?;
                Box::new(LinearDamping::diagonal(Vector6::from(*coefficients)))
            }
        })
    }
}
