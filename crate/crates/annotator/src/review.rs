//! Review state of each segment and the rules for changing it.

use chrono::{DateTime, Utc};
use pcg_core::label::relabel_allowed;
use pcg_core::{ClassLabel, Location};
use pcg_pipeline::{ManifestEntry, RelabelEntry};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReviewStatus {
    Unreviewed,
    Confirmed,
    Relabeled,
}

impl std::str::FromStr for ReviewStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "unreviewed" => Ok(Self::Unreviewed),
            "confirmed" => Ok(Self::Confirmed),
            "relabeled" => Ok(Self::Relabeled),
            other => Err(format!("unknown review status {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewItem {
    pub segment_id: String,
    pub recording_id: String,
    pub patient_id: String,
    pub location: Location,
    pub index: usize,
    pub original_label: ClassLabel,
    pub effective_label: ClassLabel,
    pub status: ReviewStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ReviewItem {
    pub fn from_entry(e: &ManifestEntry) -> Self {
        Self {
            segment_id: e.segment_id.clone(),
            recording_id: e.recording_id.clone(),
            patient_id: e.patient_id.clone(),
            location: e.location,
            index: e.index,
            original_label: e.label,
            effective_label: e.effective_label,
            status: if e.effective_label == e.label {
                ReviewStatus::Unreviewed
            } else {
                ReviewStatus::Relabeled
            },
            note: None,
        }
    }
}

/// Review items in (recording id, index) order.
pub fn initial_items(entries: &[ManifestEntry]) -> Vec<ReviewItem> {
    let mut items: Vec<ReviewItem> = entries.iter().map(ReviewItem::from_entry).collect();
    items.sort_by(|a, b| (&a.recording_id, a.index).cmp(&(&b.recording_id, b.index)));
    items
}

/// A reviewer decision. `To(l)` with `l` equal to the original label is a
/// confirmation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Confirm,
    To(ClassLabel),
}

impl std::str::FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("confirm") {
            return Ok(Action::Confirm);
        }
        s.parse::<ClassLabel>()
            .map(Action::To)
            .map_err(|_| format!("expected \"confirm\" or a class label, got {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReviewError {
    #[error("{from} -> {to} is not allowed")]
    IllegalTransition { from: ClassLabel, to: ClassLabel },
    /// Confirming would move a relabeled segment back out of Unknown.
    #[error("segment {0} was already relabeled to Unknown")]
    AlreadyRelabeled(String),
}

/// Result of applying `action` to `item`, or why it is refused.
pub fn apply(item: &ReviewItem, action: Action, note: Option<String>) -> Result<ReviewItem, ReviewError> {
    let target = match action {
        Action::Confirm => item.original_label,
        Action::To(l) => l,
    };
    let mut next = item.clone();
    if target == item.original_label {
        if item.status == ReviewStatus::Relabeled {
            return Err(ReviewError::AlreadyRelabeled(item.segment_id.clone()));
        }
        next.status = ReviewStatus::Confirmed;
    } else if relabel_allowed(item.original_label, target) {
        next.status = ReviewStatus::Relabeled;
    } else {
        return Err(ReviewError::IllegalTransition {
            from: item.original_label,
            to: target,
        });
    }
    next.effective_label = target;
    if note.is_some() {
        next.note = note;
    }
    Ok(next)
}

/// One line of the append-only audit log. `from` is the original label, so
/// a confirmation has `from == to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub timestamp: DateTime<Utc>,
    pub segment_id: String,
    pub from: ClassLabel,
    pub to: ClassLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl AuditEntry {
    pub fn record(item: &ReviewItem) -> Self {
        Self {
            timestamp: Utc::now(),
            segment_id: item.segment_id.clone(),
            from: item.original_label,
            to: item.effective_label,
            note: item.note.clone(),
        }
    }
}

/// Rebuild review state by applying `log` in order to `initial`.
pub fn replay(initial: &[ReviewItem], log: &[AuditEntry]) -> Result<Vec<ReviewItem>, String> {
    let mut items = initial.to_vec();
    let index: std::collections::HashMap<&str, usize> =
        initial.iter().enumerate().map(|(i, it)| (it.segment_id.as_str(), i)).collect();
    for (line, entry) in log.iter().enumerate() {
        let &i = index
            .get(entry.segment_id.as_str())
            .ok_or_else(|| format!("audit line {}: unknown segment {}", line + 1, entry.segment_id))?;
        if entry.from != items[i].original_label {
            return Err(format!("audit line {}: original label mismatch for {}", line + 1, entry.segment_id));
        }
        items[i] = apply(&items[i], Action::To(entry.to), entry.note.clone())
            .map_err(|e| format!("audit line {}: {e}", line + 1))?;
    }
    Ok(items)
}

/// Relabel file lines for every relabeled item.
pub fn export(items: &[ReviewItem]) -> Vec<RelabelEntry> {
    items
        .iter()
        .filter(|it| it.effective_label != it.original_label)
        .map(|it| RelabelEntry {
            segment_id: it.segment_id.clone(),
            from: it.original_label,
            to: it.effective_label,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ClassLabel::*;

    fn item(label: ClassLabel) -> ReviewItem {
        ReviewItem {
            segment_id: "s".into(),
            recording_id: "r".into(),
            patient_id: "p".into(),
            location: Location::AV,
            index: 0,
            original_label: label,
            effective_label: label,
            status: ReviewStatus::Unreviewed,
            note: None,
        }
    }

    #[test]
    fn transitions_follow_the_rule() {
        let p = apply(&item(Present), Action::To(Unknown), None).unwrap();
        assert_eq!((p.effective_label, p.status), (Unknown, ReviewStatus::Relabeled));
        let a = apply(&item(Absent), Action::Confirm, None).unwrap();
        assert_eq!((a.effective_label, a.status), (Absent, ReviewStatus::Confirmed));
        assert!(apply(&item(Unknown), Action::To(Present), None).is_err());
        assert!(apply(&item(Present), Action::To(Absent), None).is_err());
        assert_eq!(apply(&item(Unknown), Action::To(Unknown), None).unwrap().status, ReviewStatus::Confirmed);
        assert_eq!(apply(&p, Action::Confirm, None), Err(ReviewError::AlreadyRelabeled("s".into())));
        let again = apply(&p, Action::To(Unknown), Some("noise".into())).unwrap();
        assert_eq!(again.note.as_deref(), Some("noise"));
    }

    #[test]
    fn replay_reproduces_state() {
        let mut initial = vec![item(Present), item(Absent), item(Unknown)];
        for (i, it) in initial.iter_mut().enumerate() {
            it.segment_id = format!("s{i}");
        }
        let a = apply(&initial[0], Action::To(Unknown), None).unwrap();
        let b = apply(&initial[1], Action::Confirm, None).unwrap();
        let b2 = apply(&b, Action::To(Unknown), Some("n".into())).unwrap();
        let log = [AuditEntry::record(&a), AuditEntry::record(&b), AuditEntry::record(&b2)];
        let state = replay(&initial, &log).unwrap();
        assert_eq!(state, vec![a, b2, initial[2].clone()]);
        assert_eq!(export(&state).len(), 2);
    }

    #[test]
    fn actions_parse() {
        assert_eq!("confirm".parse::<Action>().unwrap(), Action::Confirm);
        assert_eq!("Unknown".parse::<Action>().unwrap(), Action::To(Unknown));
        assert!("later".parse::<Action>().is_err());
    }
}
