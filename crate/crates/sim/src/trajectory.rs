//! Running a scenario and writing its trajectory table.
//!
//! The table is comma-separated with one header row. Pose columns are the
//! dual quaternion in (real w, x, y, z, dual w, x, y, z) order; twist columns
//! are body axes, angular first; angular momentum is world axes about the
//! world origin. Reals are written with 17 significant digits.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use dqvi::integrator::{IntegratorState, Simulation};
use dqvi::reference::{rk4_step, ContinuousState};
use nalgebra::Vector3;

use crate::config::{FieldGroup, IntegratorKind, Scenario, ScenarioConfig};
use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub pose: [f64; 8],
    pub twist: [f64; 6],
    pub energy_total: f64,
    pub energy_kinetic: f64,
    pub energy_potential: f64,
    pub angular_momentum: [f64; 3],
    pub newton_iterations: usize,
    pub residual_norm: f64,
    pub unit_norm_error: f64,
    pub orthogonality_error: f64,
}

pub const POSE_COLUMNS: [&str; 8] = [
    "p_real_w", "p_real_x", "p_real_y", "p_real_z", "p_dual_w", "p_dual_x", "p_dual_y", "p_dual_z",
];
pub const TWIST_COLUMNS: [&str; 6] = ["omega_x", "omega_y", "omega_z", "v_x", "v_y", "v_z"];
const ENERGY_COLUMNS: [&str; 3] = ["energy_total", "energy_kinetic", "energy_potential"];
const MOMENTUM_COLUMNS: [&str; 3] = ["L_x", "L_y", "L_z"];
const SOLVER_COLUMNS: [&str; 4] = ["newton_iterations", "residual_norm", "unit_norm_error", "orthogonality_error"];

fn group_columns(g: FieldGroup) -> &'static [&'static str] {
    match g {
        FieldGroup::Pose => &POSE_COLUMNS,
        FieldGroup::Twist => &TWIST_COLUMNS,
        FieldGroup::Energy => &ENERGY_COLUMNS,
        FieldGroup::Momentum => &MOMENTUM_COLUMNS,
        FieldGroup::Solver => &SOLVER_COLUMNS,
    }
}

/// Selected groups in canonical order, duplicates removed.
fn canonical(fields: &[FieldGroup]) -> Vec<FieldGroup> {
    let mut g = fields.to_vec();
    g.sort();
    g.dedup();
    g
}

/// Header for the selected column groups; `t` always comes first.
pub fn header(fields: &[FieldGroup]) -> Vec<&'static str> {
    let mut h = vec!["t"];
    for g in canonical(fields) {
        h.extend_from_slice(group_columns(g));
    }
    h
}

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

impl TrajectoryRecord {
    fn from_dqvi(s: &IntegratorState) -> Self {
        let d = &s.diagnostics;
        Self {
            t: s.time,
            pose: s.pose.dual_quaternion().to_array(),
            twist: s.twist.to_vector().into(),
            energy_total: d.total_energy(),
            energy_kinetic: d.kinetic_energy,
            energy_potential: d.potential_energy,
            angular_momentum: d.angular_momentum.into(),
            newton_iterations: d.iterations,
            residual_norm: d.residual_norm,
            unit_norm_error: d.unit_norm_error,
            orthogonality_error: d.orthogonality_error,
        }
    }

    fn from_rk4(t: f64, s: &ContinuousState, scenario: &Scenario) -> Self {
        let pose = s.pose();
        let kinetic = s.kinetic_energy(&scenario.inertia);
        let potential = dqvi::dynamics::total_potential(&scenario.forces, &pose);
        let (angular, _) = s.world_momentum(&scenario.inertia);
        Self {
            t,
            pose: pose.dual_quaternion().to_array(),
            twist: s.twist.to_vector().into(),
            energy_total: kinetic + potential,
            energy_kinetic: kinetic,
            energy_potential: potential,
            angular_momentum: angular.into(),
            newton_iterations: 0,
            residual_norm: 0.0,
            unit_norm_error: pose.unit_norm_error(),
            orthogonality_error: pose.orthogonality_error(),
        }
    }

    /// Row values for the selected column groups, formatted for output.
    pub fn fields(&self, fields: &[FieldGroup]) -> Vec<String> {
        let mut row = vec![real(self.t)];
        for g in canonical(fields) {
            match g {
                FieldGroup::Pose => row.extend(self.pose.iter().map(|&x| real(x))),
                FieldGroup::Twist => row.extend(self.twist.iter().map(|&x| real(x))),
                FieldGroup::Energy => {
                    row.extend([self.energy_total, self.energy_kinetic, self.energy_potential].map(real))
                }
                FieldGroup::Momentum => row.extend(self.angular_momentum.iter().map(|&x| real(x))),
                FieldGroup::Solver => {
                    row.push(self.newton_iterations.to_string());
                    row.extend([self.residual_norm, self.unit_norm_error, self.orthogonality_error].map(real));
                }
            }
        }
        row
    }
}

/// Per-run statistics over every step, including those thinned out of the table.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub integrator: IntegratorKind,
    pub steps: usize,
    pub rows: usize,
    pub mean_iterations: f64,
    pub max_iterations: usize,
    pub max_residual: f64,
    /// `max |E_k - E_0|`.
    pub energy_drift: f64,
    /// `max |L_k - L_0|`, componentwise.
    pub momentum_drift: f64,
    pub max_unit_norm_error: f64,
    pub max_orthogonality_error: f64,
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.integrator {
            IntegratorKind::Dqvi => "dqvi",
            IntegratorKind::Rk4 => "rk4",
        };
        writeln!(f, "integrator          {name}")?;
        writeln!(f, "steps               {}", self.steps)?;
        writeln!(f, "rows written        {}", self.rows)?;
        writeln!(f, "newton iterations   mean {:.3}, max {}", self.mean_iterations, self.max_iterations)?;
        writeln!(f, "max residual        {:.3e}", self.max_residual)?;
        writeln!(f, "energy drift        {:.3e}", self.energy_drift)?;
        writeln!(f, "momentum drift      {:.3e}", self.momentum_drift)?;
        write!(
            f,
            "norm drift          {:.3e} (unit), {:.3e} (orthogonality)",
            self.max_unit_norm_error, self.max_orthogonality_error
        )
    }
}

struct Accumulator {
    summary: RunSummary,
    iteration_sum: usize,
    e0: f64,
    l0: Vector3<f64>,
}

impl Accumulator {
    fn new(integrator: IntegratorKind, first: &TrajectoryRecord) -> Self {
        Self {
            summary: RunSummary {
                integrator,
                steps: 0,
                rows: 0,
                mean_iterations: 0.0,
                max_iterations: 0,
                max_residual: 0.0,
                energy_drift: 0.0,
                momentum_drift: 0.0,
                max_unit_norm_error: 0.0,
                max_orthogonality_error: 0.0,
            },
            iteration_sum: 0,
            e0: first.energy_total,
            l0: Vector3::from(first.angular_momentum),
        }
    }

    fn add(&mut self, r: &TrajectoryRecord) {
        let s = &mut self.summary;
        self.iteration_sum += r.newton_iterations;
        s.max_iterations = s.max_iterations.max(r.newton_iterations);
        s.max_residual = s.max_residual.max(r.residual_norm);
        s.energy_drift = s.energy_drift.max((r.energy_total - self.e0).abs());
        s.momentum_drift = s.momentum_drift.max((Vector3::from(r.angular_momentum) - self.l0).amax());
        s.max_unit_norm_error = s.max_unit_norm_error.max(r.unit_norm_error);
        s.max_orthogonality_error = s.max_orthogonality_error.max(r.orthogonality_error);
    }

    fn finish(mut self, steps: usize, rows: usize) -> RunSummary {
        self.summary.steps = steps;
        self.summary.rows = rows;
        self.summary.mean_iterations = self.iteration_sum as f64 / (steps + 1) as f64;
        self.summary
    }
}

/// Streams records into a table, keeping every `stride`-th row.
struct TableWriter<W: Write> {
    csv: csv::Writer<W>,
    path: PathBuf,
    fields: Vec<FieldGroup>,
    stride: usize,
    rows: usize,
}

impl<W: Write> TableWriter<W> {
    fn new(out: W, config: &ScenarioConfig) -> Result<Self> {
        let path = config.output.path.clone();
        let mut csv = csv::Writer::from_writer(out);
        csv.write_record(header(&config.output.fields))
            .map_err(|e| SimError::io(&path, csv_error(e)))?;
        Ok(Self {
            csv,
            path,
            fields: config.output.fields.clone(),
            stride: config.output.stride,
            rows: 0,
        })
    }

    fn push(&mut self, index: usize, r: &TrajectoryRecord) -> Result<()> {
        if index % self.stride == 0 {
            self.csv
                .write_record(r.fields(&self.fields))
                .map_err(|e| SimError::io(&self.path, csv_error(e)))?;
            self.rows += 1;
        }
        Ok(())
    }

    fn flush(&mut self) -> Result<()> {
        self.csv.flush().map_err(|e| SimError::io(&self.path, e))
    }
}

fn csv_error(e: csv::Error) -> std::io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => std::io::Error::other(format!("{other:?}")),
    }
}

/// Runs the scenario, writing the table to `out`. On solver failure the rows
/// produced so far are flushed before the error is returned.
pub fn run_to_writer<W: Write>(config: &ScenarioConfig, out: W) -> Result<RunSummary> {
    let scenario = config.build()?;
    let mut table = TableWriter::new(out, config)?;
    let result = match scenario.integrator {
        IntegratorKind::Dqvi => run_dqvi(&scenario, &mut table),
        IntegratorKind::Rk4 => run_rk4(&scenario, &mut table),
    };
    table.flush()?;
    let (acc, steps) = result?;
    Ok(acc.finish(steps, table.rows))
}

/// Runs the scenario and writes the table to `config.output.path`.
pub fn run(config: &ScenarioConfig) -> Result<RunSummary> {
    let path = &config.output.path;
    let file = File::create(path).map_err(|e| SimError::io(path, e))?;
    run_to_writer(config, BufWriter::new(file))
}

fn push<W: Write>(table: &mut TableWriter<W>, acc: &mut Accumulator, index: usize, r: &TrajectoryRecord) -> Result<()> {
    acc.add(r);
    table.push(index, r)
}

fn run_dqvi<W: Write>(s: &Scenario, table: &mut TableWriter<W>) -> Result<(Accumulator, usize)> {
    let mut sim = Simulation::new(s.pose, s.twist, &s.inertia, &s.forces, s.settings)?;
    let first = TrajectoryRecord::from_dqvi(sim.state());
    let mut acc = Accumulator::new(IntegratorKind::Dqvi, &first);
    push(table, &mut acc, 0, &first)?;
    for k in 1..=s.steps {
        let r = TrajectoryRecord::from_dqvi(sim.step()?);
        push(table, &mut acc, k, &r)?;
    }
    Ok((acc, s.steps))
}

fn run_rk4<W: Write>(s: &Scenario, table: &mut TableWriter<W>) -> Result<(Accumulator, usize)> {
    let h = s.settings.step;
    let mut state = ContinuousState::new(&s.pose, s.twist);
    let first = TrajectoryRecord::from_rk4(0.0, &state, s);
    let mut acc = Accumulator::new(IntegratorKind::Rk4, &first);
    push(table, &mut acc, 0, &first)?;
    for k in 1..=s.steps {
        state = rk4_step(&state, &s.inertia, &s.forces, (k - 1) as f64 * h, h)?;
        if !state.twist.to_vector().iter().all(|x| x.is_finite()) {
            return Err(SimError::Solver(dqvi::Error::Divergence {
                iterations: 0,
                residual_norm: f64::INFINITY,
            }));
        }
        push(table, &mut acc, k, &TrajectoryRecord::from_rk4(k as f64 * h, &state, s))?;
    }
    Ok((acc, s.steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn config(extra: &str) -> ScenarioConfig {
        parse_config(&format!(
            "[body]\nmass = 1.0\ninertia = [[1.0,0.0,0.0],[0.0,2.0,0.0],[0.0,0.0,3.0]]\n\
             [initial]\nangular_velocity = [1.0, 0.1, 0.0]\n[run]\nsteps = 20\n{extra}"
        ))
        .unwrap()
    }

    fn table(c: &ScenarioConfig) -> (RunSummary, String) {
        let mut buf = Vec::new();
        let summary = run_to_writer(c, &mut buf).unwrap();
        (summary, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn header_layout() {
        let h = header(&FieldGroup::ALL);
        assert_eq!(h.len(), 1 + 8 + 6 + 3 + 3 + 4);
        assert_eq!(h[0], "t");
        assert_eq!(h[1], "p_real_w");
        assert_eq!(h[9], "omega_x");
        assert_eq!(h.last(), Some(&"orthogonality_error"));
        assert_eq!(header(&[FieldGroup::Energy, FieldGroup::Pose, FieldGroup::Pose]).len(), 1 + 8 + 3);
    }

    #[test]
    fn rows_and_stride() {
        let (s, text) = table(&config(""));
        assert_eq!(s.rows, 21);
        assert_eq!(text.lines().count(), 22);
        let (s, text) = table(&config("[output]\nstride = 5\nfields = ['energy']\n"));
        assert_eq!(s.rows, 5);
        let second: Vec<&str> = text.lines().nth(2).unwrap().split(',').collect();
        assert_eq!(second.len(), 4);
        assert_eq!(second[0].parse::<f64>().unwrap(), 5e-3);
    }

    #[test]
    fn values_round_trip_through_text() {
        let (_, text) = table(&config(""));
        let row: Vec<f64> = text.lines().nth(3).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
        let mut c = config("");
        c.run.steps = 2;
        let s = c.build().unwrap();
        let states = dqvi::simulate(s.pose, s.twist, &s.inertia, &s.forces, s.settings, 2).unwrap();
        let expected = states[2].pose.dual_quaternion().to_array();
        assert_eq!(&row[1..9], &expected[..]);
    }

    #[test]
    fn rk4_has_same_schema() {
        let (a, ta) = table(&config(""));
        let (b, tb) = table(&config("").with_overrides(&crate::config::Overrides {
            integrator: Some(IntegratorKind::Rk4),
            ..Default::default()
        }).unwrap());
        assert_eq!(ta.lines().next(), tb.lines().next());
        assert_eq!(a.rows, b.rows);
        assert_eq!(b.max_iterations, 0);
        assert!(a.mean_iterations >= 1.0);
    }

    #[test]
    fn summary_reports_conservation() {
        let (s, _) = table(&config(""));
        assert!(s.max_residual <= 1e-12);
        assert!(s.max_unit_norm_error < 1e-13);
        assert!(s.momentum_drift < 1e-12);
        let text = s.to_string();
        assert!(text.contains("energy drift"));
        assert!(text.contains("momentum drift"));
        assert!(text.contains("norm drift"));
    }
}
