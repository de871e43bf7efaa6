//! File formats: trajectory CSV, vector CSV, JSON, MatrixMarket.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{CarlemanError, Result};
use crate::integrate::{Trajectory, TrajectoryMeta};
use crate::sparse::CsrMatrix;

/// Header `t,x1,...,xn`, one row per sample.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string()];
    header.extend((1..=traj.dim()).map(|j| format!("x{j}")));
    out.write_record(&header)?;
    for (t, x) in traj.times.iter().zip(&traj.states) {
        let mut rec = vec![t.to_string()];
        rec.extend(x.iter().map(f64::to_string));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_trajectory_csv(path: impl AsRef<Path>) -> Result<Trajectory> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut times = Vec::new();
    let mut states = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let mut vals = rec.iter().map(|f| {
            f.trim()
                .parse::<f64>()
                .map_err(|e| CarlemanError::InvalidConfig(format!("bad number `{f}`: {e}")))
        });
        let t = vals
            .next()
            .ok_or_else(|| CarlemanError::InvalidConfig("empty trajectory row".into()))??;
        times.push(t);
        states.push(vals.collect::<Result<Vec<f64>>>()?);
    }
    Ok(Trajectory {
        times,
        states,
        meta: TrajectoryMeta::default(),
    })
}

/// Header `index,value`.
pub fn write_vector_csv<W: Write>(values: &[f64], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["index", "value"])?;
    for (i, v) in values.iter().enumerate() {
        out.write_record([i.to_string(), v.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn save_trajectory(traj: &Trajectory, path: impl AsRef<Path>) -> Result<()> {
    write_trajectory_csv(traj, BufWriter::new(File::create(path)?))
}

pub fn save_vector(values: &[f64], path: impl AsRef<Path>) -> Result<()> {
    write_vector_csv(values, BufWriter::new(File::create(path)?))
}

pub fn save_matrix_market(m: &CsrMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    m.write_matrix_market(&mut w)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trajectory_csv_round_trip() {
        let traj = Trajectory {
            times: vec![0.0, 0.5, 1.0],
            states: vec![vec![1.0, -2.0], vec![0.1, 1e-20], vec![3.25, 0.0]],
            meta: TrajectoryMeta::default(),
        };
        let mut buf = Vec::new();
        write_trajectory_csv(&traj, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,x1,x2\n0,1,-2\n"));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        std::fs::write(&path, text).unwrap();
        let back = read_trajectory_csv(&path).unwrap();
        assert_eq!(back.times, traj.times);
        assert_eq!(back.states, traj.states);
    }

    #[test]
    fn vector_csv() {
        let mut buf = Vec::new();
        write_vector_csv(&[1.5, -0.0], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "index,value\n0,1.5\n1,-0\n");
    }
}
