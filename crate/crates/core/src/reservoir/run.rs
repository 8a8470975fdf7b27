//! Multi-reservoir run over a merged event timeline.

use crate::data::IstsDataset;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::reservoir::{fuse, Reservoir, StateHistory};
use crate::timecode::TimeEncoder;

#[derive(Clone, Debug, PartialEq)]
pub struct StateRecord {
    pub time: f64,
    /// Fused state `x~`.
    pub fused: Vec<f64>,
    /// Raw time-encoding state `x` (before long-short mixing and fusion).
    pub raw: Vec<f64>,
}

/// States of one reservoir, one record per observation of its series.
#[derive(Clone, Debug, PartialEq)]
pub struct StateTrajectory {
    pub series: usize,
    pub states: Vec<StateRecord>,
}

impl StateTrajectory {
    /// Index of the last record with `time < bound`.
    pub fn last_before(&self, bound: f64) -> Option<usize> {
        let idx = self.states.partition_point(|s| s.time < bound);
        idx.checked_sub(1)
    }
}

/// Runs every reservoir over its own series from zero initial state.
///
/// Observations from all series are merged into one timeline ordered by
/// time. Simultaneous observations form one event: their time-encoding and
/// long-short states are computed first (in parallel under
/// [`Execution::Parallel`]), and only then does each reservoir fuse with the
/// latest long-short states of the others. Reservoirs that have not been
/// observed yet contribute zero vectors.
pub fn run(
    reservoirs: &[Reservoir],
    dataset: &IstsDataset,
    encoder: Option<&TimeEncoder>,
    exec: Execution,
) -> Result<Vec<StateTrajectory>> {
    let init: Vec<Vec<f64>> = reservoirs.iter().map(|r| vec![0.0; r.size()]).collect();
    run_inner(reservoirs, dataset, encoder, &init, false, exec)
}

/// [`run`] starting from a given fused/raw state per reservoir.
pub fn run_with_initial(
    reservoirs: &[Reservoir],
    dataset: &IstsDataset,
    encoder: Option<&TimeEncoder>,
    initial: &[Vec<f64>],
    exec: Execution,
) -> Result<Vec<StateTrajectory>> {
    run_inner(reservoirs, dataset, encoder, initial, true, exec)
}

fn run_inner(
    reservoirs: &[Reservoir],
    dataset: &IstsDataset,
    encoder: Option<&TimeEncoder>,
    initial: &[Vec<f64>],
    seeded: bool,
    exec: Execution,
) -> Result<Vec<StateTrajectory>> {
    let d = dataset.num_series();
    if d == 0 || dataset.total_observations() == 0 {
        return Err(Error::EmptyDataset("nothing to run".into()));
    }
    if reservoirs.len() != d || initial.len() != d {
        return Err(Error::Dimension(format!(
            "{} reservoirs / {} initial states for {d} series",
            reservoirs.len(),
            initial.len()
        )));
    }
    if let Some(enc) = encoder {
        if enc.num_series() != d {
            return Err(Error::Dimension(format!("time encoder covers {} series, dataset has {d}", enc.num_series())));
        }
        if let Some(r) = reservoirs.iter().find(|r| r.te_dim != enc.dim()) {
            return Err(Error::Dimension(format!(
                "reservoir expects time encoding dim {}, encoder produces {}",
                r.te_dim,
                enc.dim()
            )));
        }
    }
    for (r, s) in reservoirs.iter().zip(initial) {
        if s.len() != r.size() {
            return Err(Error::Dimension("initial state size differs from reservoir size".into()));
        }
    }
    static FUSION_WARNING: std::sync::Once = std::sync::Once::new();
    if d == 1 && reservoirs[0].params.fusion_rate != 1.0 {
        FUSION_WARNING.call_once(|| log::warn!("single series: no neighbours to fuse, fusion rate treated as 1"));
    }

    // merged timeline: (time, series, observation index)
    let mut events: Vec<(f64, usize, usize)> = dataset
        .series()
        .iter()
        .enumerate()
        .flat_map(|(s, ser)| ser.observations().iter().enumerate().map(move |(i, o)| (o.time, s, i)))
        .collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut histories: Vec<StateHistory> = reservoirs
        .iter()
        .zip(initial)
        .map(|(r, s)| {
            if seeded {
                StateHistory::seeded(r.params.long_skip, s.clone())
            } else {
                StateHistory::new(r.params.long_skip)
            }
        })
        .collect();
    let mut latest_ls: Vec<Vec<f64>> = reservoirs.iter().map(|r| vec![0.0; r.size()]).collect();
    let mut out: Vec<StateTrajectory> = dataset
        .series()
        .iter()
        .enumerate()
        .map(|(s, ser)| StateTrajectory { series: s, states: Vec::with_capacity(ser.len()) })
        .collect();

    let mut start = 0;
    while start < events.len() {
        let t = events[start].0;
        let mut end = start + 1;
        while end < events.len() && events[end].0 == t {
            end += 1;
        }
        let group = &events[start..end];

        let excited: Vec<(Vec<f64>, Vec<f64>)> = exec.map(group, |&(time, s, i)| {
            let res = &reservoirs[s];
            let u = dataset.series()[s].observations()[i].value;
            let te_proj = match encoder {
                Some(enc) => res.project_te(&enc.encode(s, time)),
                None => vec![0.0; res.size()],
            };
            let zeros = vec![0.0; res.size()];
            let h = &histories[s];
            res.excite(
                u,
                &te_proj,
                h.fused().unwrap_or(&zeros),
                h.raw_back(1).unwrap_or(&zeros),
                h.raw_back(res.params.long_skip).unwrap_or(&zeros),
            )
        });

        // barrier: publish this event's long-short states before fusing
        for (&(_, s, _), (_, ls)) in group.iter().zip(&excited) {
            latest_ls[s].clone_from(ls);
        }

        let fused: Vec<Vec<f64>> = exec.map_range(group.len(), |g| {
            let s = group[g].1;
            let neighbors: Vec<&[f64]> =
                (0..d).filter(|&o| o != s).map(|o| latest_ls[o].as_slice()).collect();
            fuse(&excited[g].1, &neighbors, reservoirs[s].params.fusion_rate)
        });

        for ((&(time, s, _), (raw, _)), f) in group.iter().zip(excited).zip(fused) {
            histories[s].push(raw.clone(), f.clone());
            out[s].states.push(StateRecord { time, fused: f, raw });
        }
        start = end;
    }
    Ok(out)
}
