//! Event-driven scheduling of virtual participants in simulated time.
//!
//! Free participants are assigned to unlocked nodes whose completed count is
//! the current minimum over all nodes (lowest id first). A node stays locked
//! until its trial completes; only then does its new melody become visible.
//! Trial durations are i.i.d. Exponential(1).

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};

use rand_distr::{Distribution, Exp1};

use super::{candidate_set, ExperimentConfig, RunSetup, TrialRecord};
use crate::behavior::select;
use crate::melody::Melody;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
struct Participant {
    id: usize,
    trials_done: usize,
}

/// A trial in flight, keyed by completion time then issue order.
struct Pending {
    end: f64,
    seq: u64,
    participant: Participant,
    record: TrialRecord,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        self.end
            .total_cmp(&other.end)
            .then(self.seq.cmp(&other.seq))
    }
}

/// Asynchronous run; records are returned in completion order.
pub fn run_asynchronous(config: &ExperimentConfig, batch: usize) -> Result<Vec<TrialRecord>> {
    let mut setup = RunSetup::new(config, batch)?;
    let mut rng = setup.rng();
    let n = setup.graph.node_count();
    let target = config.iterations;

    let mut melodies = setup.initial.clone();
    let mut completed = vec![0usize; n];
    let mut locked = vec![false; n];
    let mut free: VecDeque<Participant> = (0..config.pool_size)
        .map(|id| Participant { id, trials_done: 0 })
        .collect();
    let mut next_participant = config.pool_size;
    let mut events: BinaryHeap<Reverse<Pending>> = BinaryHeap::new();
    let mut seq = 0u64;
    let mut now = 0.0f64;
    let mut records = Vec::with_capacity(target * n);

    loop {
        // Hand out work to every free participant that can get some.
        while !free.is_empty() {
            let floor = *completed.iter().min().expect("nonempty graph");
            let Some(node) =
                (0..n).find(|&v| !locked[v] && completed[v] == floor && completed[v] < target)
            else {
                break;
            };
            let participant = free.pop_front().expect("checked nonempty");
            locked[node] = true;

            let candidates = candidate_set(&melodies, &setup.graph, node, setup.condition);
            let options: Vec<Melody> = candidates.iter().map(|c| c.melody).collect();
            let selected = select(&setup.selection, &config.agent.scorer, &options, &mut rng)?;
            let produced = setup
                .participants
                .reproduction(participant.id)
                .reproduce(&options[selected], &mut rng)?;
            let duration: f64 = Exp1.sample(&mut rng);
            let end = now + duration;

            events.push(Reverse(Pending {
                end,
                seq,
                participant,
                record: TrialRecord {
                    batch: setup.batch,
                    condition: setup.condition,
                    topology: setup.topology,
                    iteration: completed[node] + 1,
                    node,
                    participant: participant.id,
                    candidates,
                    selected,
                    produced,
                    start_time: Some(now),
                    end_time: Some(end),
                },
            }));
            seq += 1;
        }

        let Some(Reverse(done)) = events.pop() else {
            if completed.iter().all(|&c| c == target) {
                break;
            }
            return Err(Error::Scheduling(
                "no trial in flight but nodes remain incomplete".into(),
            ));
        };
        now = done.end;
        let node = done.record.node;
        melodies[node] = done.record.produced;
        completed[node] += 1;
        locked[node] = false;
        records.push(done.record);

        let mut p = done.participant;
        p.trials_done += 1;
        if p.trials_done < config.trials_per_participant {
            free.push_back(p);
        } else {
            free.push_back(Participant {
                id: next_participant,
                trials_done: 0,
            });
            next_participant += 1;
        }
    }
    Ok(records)
}
