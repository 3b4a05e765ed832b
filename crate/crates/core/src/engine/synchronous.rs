use super::{candidate_set, ExperimentConfig, RunSetup, TrialRecord};
use crate::behavior::select;
use crate::melody::Melody;
use crate::Result;

/// Generation-synchronous run: at iteration `t` every node (in id order)
/// chooses from the iteration `t - 1` snapshot. Produces `T * n` records.
pub fn run_synchronous(config: &ExperimentConfig, batch: usize) -> Result<Vec<TrialRecord>> {
    let mut setup = RunSetup::new(config, batch)?;
    let mut rng = setup.rng();
    let n = setup.graph.node_count();
    let mut current = setup.initial.clone();
    let mut records = Vec::with_capacity(config.iterations * n);

    for iteration in 1..=config.iterations {
        let snapshot = current.clone();
        for node in 0..n {
            let participant = ((iteration - 1) * n + node) / config.trials_per_participant;
            let candidates = candidate_set(&snapshot, &setup.graph, node, setup.condition);
            let melodies: Vec<Melody> = candidates.iter().map(|c| c.melody).collect();
            let selected = select(&setup.selection, &config.agent.scorer, &melodies, &mut rng)?;
            let produced = setup
                .participants
                .reproduction(participant)
                .reproduce(&melodies[selected], &mut rng)?;
            current[node] = produced;
            records.push(TrialRecord {
                batch: setup.batch,
                condition: setup.condition,
                topology: setup.topology,
                iteration,
                node,
                participant,
                candidates,
                selected,
                produced,
                start_time: None,
                end_time: None,
            });
        }
    }
    Ok(records)
}
