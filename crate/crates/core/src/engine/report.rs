//! CSV writers for trajectories and aggregate tables.

use std::io::Write;

use super::{Aggregate, RunMetrics};
use crate::scalar::Scalar;

/// Columns `k,node,x,x_hat,fired,updated,is_adversary`. Adversary rows carry
/// no state.
pub fn write_trajectory<T: Scalar, W: Write>(metrics: &RunMetrics<T>, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "node", "x", "x_hat", "fired", "updated", "is_adversary"])?;
    let traj = &metrics.trajectory;
    let mut nodes: Vec<(usize, Option<usize>)> = metrics
        .normal_nodes
        .iter()
        .enumerate()
        .map(|(idx, &i)| (i, Some(idx)))
        .chain(metrics.adversaries.iter().map(|&a| (a, None)))
        .collect();
    nodes.sort_unstable();
    for k in 0..traj.len() {
        for &(node, idx) in &nodes {
            let (k_s, node_s) = (k.to_string(), node.to_string());
            match idx {
                Some(idx) => w.write_record([
                    k_s.as_str(),
                    &node_s,
                    &traj.x[k][idx].to_string(),
                    &traj.x_hat[k][idx].to_string(),
                    bool_str(traj.fired[k][idx]),
                    bool_str(traj.updated[k][idx]),
                    "false",
                ])?,
                None => w.write_record([k_s.as_str(), &node_s, "", "", "false", "false", "true"])?,
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn bool_str(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

pub fn write_aggregates<W: Write>(rows: &[Aggregate], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
