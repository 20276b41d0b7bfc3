//! Marginals by full enumeration. A test oracle for the junction tree.

use super::network::Network;
use super::{EvidenceFactor, GraphicalError, PosteriorReport};

pub const BRUTE_FORCE_MAX_NODES: usize = 20;

pub fn brute_force_marginals(
    network: &Network,
    evidence: &[EvidenceFactor],
    instance_id: &str,
) -> Result<PosteriorReport, GraphicalError> {
    let graph = network.graph();
    let k = graph.len();
    if k > BRUTE_FORCE_MAX_NODES {
        return Err(GraphicalError::TooLarge { nodes: k, cap: BRUTE_FORCE_MAX_NODES });
    }

    let mut lik = vec![[1.0f64, 1.0f64]; k];
    let mut log_offset = 0.0;
    for e in evidence {
        let v = graph
            .ix(e.node.as_str())
            .ok_or_else(|| GraphicalError::InvalidEvidence(e.node.clone()))?;
        let (l0, l1, ls) = e.normalized()?;
        lik[v][0] *= l0;
        lik[v][1] *= l1;
        log_offset += ls;
    }

    let child_masks: Vec<u32> = (0..k)
        .map(|i| graph.children_of(i).iter().fold(0u32, |m, &c| m | (1 << c)))
        .collect();

    let mut total = 0.0;
    let mut on = vec![0.0; k];
    for cfg in 0u32..(1u32 << k) {
        let mut w = 1.0;
        for i in 0..k {
            let z = cfg >> i & 1 == 1;
            w *= network.cpd(i).prob(z, cfg & child_masks[i] != 0) * lik[i][usize::from(z)];
            if w == 0.0 {
                break;
            }
        }
        if w == 0.0 {
            continue;
        }
        total += w;
        for (i, acc) in on.iter_mut().enumerate() {
            if cfg >> i & 1 == 1 {
                *acc += w;
            }
        }
    }
    if total <= 0.0 {
        return Err(GraphicalError::ImpossibleEvidence);
    }
    Ok(PosteriorReport {
        instance_id: instance_id.to_string(),
        marginal: graph
            .classes()
            .iter()
            .cloned()
            .zip(on.iter().map(|&x| x / total))
            .collect(),
        log_evidence: total.ln() + log_offset,
    })
}
