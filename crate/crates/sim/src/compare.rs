//! Differences between two trajectory tables.
//!
//! Both tables need `t` and the pose and twist columns; other columns are
//! ignored. Rows are matched by time. The second table may be sampled more finely
//! than the first (for example a reference run at a smaller step); every
//! row of the first must have a counterpart.

use std::fmt;
use std::path::{Path, PathBuf};

use dqvi::kinematics::pose_distance;
use dqvi::{DualQuaternion, Pose};
use nalgebra::Vector6;

use crate::error::{Result, SimError};
use crate::trajectory::{POSE_COLUMNS, TWIST_COLUMNS};

/// Two sample times closer than this, relative to `max(1, |t|)`, are the same.
pub const TIME_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub path: PathBuf,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bad = |message: String| SimError::Trajectory {
            path: path.to_path_buf(),
            message,
        };
        let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(e) => SimError::io(path, e),
            other => bad(format!("{other:?}")),
        })?;
        let columns: Vec<String> = reader
            .headers()
            .map_err(|e| bad(e.to_string()))?
            .iter()
            .map(str::to_owned)
            .collect();
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| bad(e.to_string()))?;
            let row = record
                .iter()
                .map(|x| x.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| bad(format!("row {}: {e}", i + 1)))?;
            rows.push(row);
        }
        Ok(Self {
            path: path.to_path_buf(),
            columns,
            rows,
        })
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| SimError::Schema(format!("{} has no `{name}` column", self.path.display())))
    }

    fn pose_twist(&self, row: usize, pose_at: usize, twist_at: usize) -> Result<(Pose, Vector6<f64>)> {
        let r = &self.rows[row];
        let p = DualQuaternion::from_array(std::array::from_fn(|i| r[pose_at + i]));
        let pose = Pose::try_new(p).map_err(|e| SimError::Trajectory {
            path: self.path.clone(),
            message: format!("row {}: {e}", row + 1),
        })?;
        Ok((pose, Vector6::from_fn(|i, _| r[twist_at + i])))
    }

    fn layout(&self) -> Result<(usize, usize, usize)> {
        let t = self.column("t")?;
        let p = self.column(POSE_COLUMNS[0])?;
        let w = self.column(TWIST_COLUMNS[0])?;
        for (i, name) in POSE_COLUMNS.iter().enumerate() {
            if self.columns.get(p + i).map(String::as_str) != Some(name) {
                return Err(SimError::Schema(format!("{}: pose columns out of order", self.path.display())));
            }
        }
        for (i, name) in TWIST_COLUMNS.iter().enumerate() {
            if self.columns.get(w + i).map(String::as_str) != Some(name) {
                return Err(SimError::Schema(format!("{}: twist columns out of order", self.path.display())));
            }
        }
        Ok((t, p, w))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: usize,
    /// Screw magnitude of `p_a† ⊗ p_b`.
    pub max_pose: f64,
    pub rms_pose: f64,
    pub final_pose: f64,
    /// Euclidean norm of the body twist difference.
    pub max_twist: f64,
    pub rms_twist: f64,
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "rows {}  pose max {:.6e} rms {:.6e} final {:.6e}  twist max {:.6e} rms {:.6e}",
            self.rows, self.max_pose, self.rms_pose, self.final_pose, self.max_twist, self.rms_twist
        )
    }
}

fn same_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIME_TOLERANCE * a.abs().max(1.0)
}

/// Compares `a` against `b` at every time sample of `a`.
pub fn compare(a: &Trajectory, b: &Trajectory) -> Result<Comparison> {
    let (t_at, pose_at, twist_at) = a.layout()?;
    let (bt_at, bpose_at, btwist_at) = b.layout()?;
    if a.rows.is_empty() {
        return Err(SimError::Schema(format!("{} has no rows", a.path.display())));
    }
    let (mut max_pose, mut sum_pose, mut max_twist, mut sum_twist, mut final_pose) = (0.0_f64, 0.0, 0.0_f64, 0.0, 0.0);
    let mut j = 0;
    for i in 0..a.rows.len() {
        let t = a.rows[i][t_at];
        while j < b.rows.len() && b.rows[j][bt_at] < t && !same_time(b.rows[j][bt_at], t) {
            j += 1;
        }
        if j == b.rows.len() || !same_time(b.rows[j][bt_at], t) {
            return Err(SimError::Schema(format!(
                "{} has no sample at t = {t} from {}",
                b.path.display(),
                a.path.display()
            )));
        }
        let (pa, ta) = a.pose_twist(i, pose_at, twist_at)?;
        let (pb, tb) = b.pose_twist(j, bpose_at, btwist_at)?;
        let dp = pose_distance(&pa, &pb);
        let dt = (ta - tb).norm();
        max_pose = max_pose.max(dp);
        max_twist = max_twist.max(dt);
        sum_pose += dp * dp;
        sum_twist += dt * dt;
        final_pose = dp;
    }
    let n = a.rows.len() as f64;
    Ok(Comparison {
        rows: a.rows.len(),
        max_pose,
        rms_pose: (sum_pose / n).sqrt(),
        final_pose,
        max_twist,
        rms_twist: (sum_twist / n).sqrt(),
    })
}
