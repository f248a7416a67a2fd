//! Feature extraction over a segment store, cached as `.feat` files.

use pcg_core::features::{Extractor, FeatureKind, FeatureParams};
use pcg_core::store::{read_feature_map, write_feature_map};

use crate::error::{PipelineError, Result};
use crate::manifest::ManifestEntry;
use crate::store::SegmentStore;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExtractReport {
    pub computed: usize,
    pub cached: usize,
}

fn is_cached(store: &SegmentStore, kind: FeatureKind, params: &FeatureParams, id: &str) -> bool {
    read_feature_map(&store.feature_path(kind, id))
        .map(|m| m.kind == kind && m.params_hash == params.hash_for(kind))
        .unwrap_or(false)
}

/// Extract `kind` features for every entry that lacks an up-to-date cached
/// map. Work is spread over the available cores; each segment's map depends
/// only on its samples, so the result is independent of scheduling.
pub fn extract_features(
    store: &SegmentStore,
    entries: &[ManifestEntry],
    kind: FeatureKind,
    params: &FeatureParams,
) -> Result<ExtractReport> {
    let todo: Vec<&ManifestEntry> = entries
        .iter()
        .filter(|e| !is_cached(store, kind, params, &e.segment_id))
        .collect();
    let report = ExtractReport {
        computed: todo.len(),
        cached: entries.len() - todo.len(),
    };
    let Some(first) = todo.first() else {
        return Ok(report);
    };
    let dir = store.feature_path(kind, "x").parent().unwrap().to_path_buf();
    std::fs::create_dir_all(&dir).map_err(|e| PipelineError::io(&dir, e))?;
    let (samples, rate) = store.read_segment(&first.segment_id)?;
    let extractor = Extractor::new(kind, params, samples.len(), rate as f64)?;
    let expected_len = samples.len();

    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(todo.len());
    let chunk = todo.len().div_ceil(workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = todo
            .chunks(chunk)
            .map(|part| {
                let extractor = &extractor;
                scope.spawn(move || -> Result<()> {
                    for e in part {
                        let (x, _) = store.read_segment(&e.segment_id)?;
                        if x.len() != expected_len {
                            return Err(PipelineError::Invalid(format!(
                                "segment {} has {} samples, expected {expected_len}",
                                e.segment_id,
                                x.len()
                            )));
                        }
                        let map = extractor.extract(&x)?;
                        write_feature_map(&store.feature_path(kind, &e.segment_id), &map)?;
                    }
                    Ok(())
                })
            })
            .collect();
        handles.into_iter().try_for_each(|h| h.join().expect("extraction worker panicked"))
    })?;
    Ok(report)
}

/// Cached maps of `entries` as `f32` rows-by-columns buffers.
pub fn load_features(
    store: &SegmentStore,
    entries: &[ManifestEntry],
    kind: FeatureKind,
    params: &FeatureParams,
) -> Result<([usize; 2], Vec<Vec<f32>>)> {
    let mut shape = None;
    let mut out = Vec::with_capacity(entries.len());
    for e in entries {
        let map = read_feature_map(&store.feature_path(kind, &e.segment_id))?;
        if map.params_hash != params.hash_for(kind) {
            return Err(PipelineError::Invalid(format!("stale features for {}", e.segment_id)));
        }
        let s = [map.rows, map.cols];
        if *shape.get_or_insert(s) != s {
            return Err(PipelineError::Invalid(format!("feature shape {s:?} of {} differs", e.segment_id)));
        }
        out.push(map.data.iter().map(|&v| v as f32).collect());
    }
    let shape = shape.ok_or_else(|| PipelineError::Invalid("no entries to load".into()))?;
    Ok((shape, out))
}
