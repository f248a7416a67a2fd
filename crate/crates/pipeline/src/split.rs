use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{PipelineError, Result};
use crate::manifest::{DatasetManifest, Split};

/// Whole-patient counts per split: train and val rounded from the ratios,
/// test takes the rest. Every split with a positive ratio gets at least one
/// patient when there are enough to go around.
pub fn split_sizes(patients: usize, ratios: [f64; 3]) -> [usize; 3] {
    let train = ((patients as f64 * ratios[0]).round() as usize).min(patients);
    let val = ((patients as f64 * ratios[1]).round() as usize).min(patients - train);
    let mut sizes = [train, val, patients - train - val];
    for k in 1..3 {
        if sizes[k] == 0 && ratios[k] > 0.0 {
            let donor = (0..3).max_by_key(|&d| sizes[d]).unwrap();
            if sizes[donor] > 1 {
                sizes[donor] -= 1;
                sizes[k] += 1;
            }
        }
    }
    sizes
}

/// Assign every patient, and so all its segments, to one split.
///
/// Patients are grouped by their most severe label and shuffled within the
/// group; the concatenated order is then dealt to the splits so that each
/// split receives its exact quota and a proportional share of each group.
pub fn split_patients(manifest: &mut DatasetManifest, ratios: [f64; 3], seed: u64) -> Result<()> {
    if ratios.iter().any(|r| *r < 0.0) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(PipelineError::Config(format!("split ratios {ratios:?} must be non-negative and sum to 1")));
    }
    let mut strata: BTreeMap<&str, (u8, String)> = BTreeMap::new();
    for e in &manifest.entries {
        let s = strata.entry(&e.patient_id).or_insert((0, e.effective_label.as_str().to_string()));
        if e.effective_label.severity() >= s.0 {
            *s = (e.effective_label.severity(), e.effective_label.as_str().to_string());
        }
    }
    let n = strata.len();
    if n < 3 {
        return Err(PipelineError::Invalid(format!("need at least 3 patients to split, found {n}")));
    }
    let mut groups: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (pid, (_, label)) in &strata {
        groups.entry(label.as_str()).or_default().push(pid);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order = Vec::with_capacity(n);
    for members in groups.values_mut() {
        members.shuffle(&mut rng);
        order.extend(members.iter().copied());
    }

    let quota = split_sizes(n, ratios);
    let mut assigned = [0usize; 3];
    let mut assignment: BTreeMap<String, Split> = BTreeMap::new();
    for (i, pid) in order.iter().enumerate() {
        let progress = (i + 1) as f64 / n as f64;
        let k = (0..3)
            .filter(|&k| assigned[k] < quota[k])
            .max_by(|&a, &b| {
                let da = quota[a] as f64 * progress - assigned[a] as f64;
                let db = quota[b] as f64 * progress - assigned[b] as f64;
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("quotas sum to the patient count");
        assigned[k] += 1;
        assignment.insert(pid.to_string(), Split::ALL[k]);
    }
    for e in &mut manifest.entries {
        e.split = Some(assignment[&e.patient_id]);
    }
    Ok(())
}
