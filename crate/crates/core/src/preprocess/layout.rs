//! PhysioNet directory layouts.
//!
//! * 2022 (CirCor): one `<patient>.txt` per patient listing its recordings,
//!   followed by `#Key: value` lines including `#Murmur:` and
//!   `#Murmur locations:`; WAV files sit next to the text files.
//! * 2016: `REFERENCE.csv` rows `<record>,<-1|1>` in the root or in each
//!   `training-*` subdirectory, with `<record>.wav` beside it.

use std::path::{Path, PathBuf};

use crate::error::{CoreError, Result};
use crate::label::{ClassLabel, DatasetTag, Location};
use crate::preprocess::recording::{DatasetMetadata, MetadataRow};

/// Guess which layout `root` follows.
pub fn detect_layout(root: &Path) -> Result<DatasetTag> {
    if !reference_csvs(root)?.is_empty() {
        return Ok(DatasetTag::Pcg2016);
    }
    if !patient_files(&circor_dir(root))?.is_empty() {
        return Ok(DatasetTag::Pcg2022);
    }
    Err(CoreError::Format {
        path: root.to_path_buf(),
        reason: "neither patient .txt files nor REFERENCE.csv found".into(),
    })
}

pub fn read_metadata(root: &Path) -> Result<DatasetMetadata> {
    match detect_layout(root)? {
        DatasetTag::Pcg2022 => read_circor_metadata(root),
        DatasetTag::Pcg2016 => read_physionet2016_metadata(root),
    }
}

fn circor_dir(root: &Path) -> PathBuf {
    let nested = root.join("training_data");
    if nested.is_dir() {
        nested
    } else {
        root.to_path_buf()
    }
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CoreError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    out.sort();
    Ok(out)
}

fn patient_files(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    Ok(sorted_entries(dir)?
        .into_iter()
        .filter(|p| p.extension().is_some_and(|e| e == "txt"))
        .collect())
}

fn reference_csvs(root: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    if !root.is_dir() {
        return Err(CoreError::Format {
            path: root.to_path_buf(),
            reason: "dataset root is not a directory".into(),
        });
    }
    let direct = root.join("REFERENCE.csv");
    if direct.is_file() {
        out.push(direct);
    }
    for sub in sorted_entries(root)? {
        let csv = sub.join("REFERENCE.csv");
        if sub.is_dir() && csv.is_file() {
            out.push(csv);
        }
    }
    Ok(out)
}

/// Parse every patient file of a CirCor-style dataset.
///
/// Recording labels are derived location-wise: an Unknown patient yields
/// Unknown recordings; a Present patient yields Present recordings at the
/// listed murmur locations and Absent elsewhere.
pub fn read_circor_metadata(root: &Path) -> Result<DatasetMetadata> {
    let dir = circor_dir(root);
    let mut meta = DatasetMetadata::new(DatasetTag::Pcg2022);
    for path in patient_files(&dir)? {
        for row in parse_patient_file(&path)? {
            meta.insert(row);
        }
    }
    Ok(meta)
}

pub fn parse_patient_file(path: &Path) -> Result<Vec<MetadataRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let malformed = |reason: String| CoreError::Format {
        path: path.to_path_buf(),
        reason,
    };

    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| malformed("empty patient file".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() < 3 {
        return Err(malformed(format!("bad header line {header:?}")));
    }
    let patient_id = fields[0].to_string();
    let n_recordings: usize = fields[1]
        .parse()
        .map_err(|_| malformed(format!("bad recording count {:?}", fields[1])))?;
    let rate: u32 = fields[2]
        .parse()
        .map_err(|_| malformed(format!("bad sample rate {:?}", fields[2])))?;

    let mut recordings = Vec::with_capacity(n_recordings);
    for _ in 0..n_recordings {
        let line = lines
            .next()
            .ok_or_else(|| malformed("fewer recording lines than announced".into()))?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        let wav_name = parts
            .iter()
            .find(|p| p.ends_with(".wav"))
            .ok_or_else(|| malformed(format!("no wav file in {line:?}")))?;
        let location: Location = parts[0].parse()?;
        recordings.push((location, dir.join(wav_name)));
    }

    let mut murmur = None;
    let mut murmur_locations: Vec<Location> = Vec::new();
    for line in lines {
        let Some(rest) = line.strip_prefix('#') else { continue };
        let Some((key, value)) = rest.split_once(':') else { continue };
        match key.trim() {
            "Murmur" => murmur = Some(value.trim().parse::<ClassLabel>()?),
            "Murmur locations" => {
                murmur_locations = value
                    .trim()
                    .split('+')
                    .filter_map(|s| s.trim().parse::<Location>().ok())
                    .collect();
            }
            _ => {}
        }
    }
    let murmur = murmur.ok_or_else(|| CoreError::MissingLabel(patient_id.clone()))?;
    if !DatasetTag::Pcg2022.accepts(murmur) {
        return Err(CoreError::LabelTaskMismatch {
            label: murmur.to_string(),
            context: format!("patient {patient_id}"),
        });
    }

    Ok(recordings
        .into_iter()
        .map(|(location, wav_path)| {
            let label = match murmur {
                ClassLabel::Present if !murmur_locations.contains(&location) => ClassLabel::Absent,
                other => other,
            };
            let recording_id = wav_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            MetadataRow {
                recording_id,
                patient_id: patient_id.clone(),
                location,
                label,
                sample_rate_hz: Some(rate),
                wav_path,
            }
        })
        .collect())
}

/// Parse every `REFERENCE.csv` of a 2016-style dataset. Each record is its
/// own patient since the corpus carries no subject ids.
pub fn read_physionet2016_metadata(root: &Path) -> Result<DatasetMetadata> {
    let mut meta = DatasetMetadata::new(DatasetTag::Pcg2016);
    for csv in reference_csvs(root)? {
        let dir = csv.parent().unwrap_or(Path::new(".")).to_path_buf();
        let text = std::fs::read_to_string(&csv).map_err(|e| CoreError::io(&csv, e))?;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let mut parts = line.split(',');
            let (Some(name), Some(code)) = (parts.next(), parts.next()) else {
                return Err(CoreError::Format {
                    path: csv.clone(),
                    reason: format!("bad reference row {line:?}"),
                });
            };
            let name = name.trim();
            let label = match code.trim() {
                "-1" => ClassLabel::Normal,
                "1" => ClassLabel::Abnormal,
                other => {
                    return Err(CoreError::Format {
                        path: csv.clone(),
                        reason: format!("bad label code {other:?}"),
                    })
                }
            };
            meta.insert(MetadataRow {
                recording_id: name.to_string(),
                patient_id: name.to_string(),
                location: Location::Single,
                label,
                sample_rate_hz: None,
                wav_path: dir.join(format!("{name}.wav")),
            });
        }
    }
    Ok(meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circor_location_labels() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("2530.txt"),
            "2530 3 4000\nAV 2530_AV.hea 2530_AV.wav 2530_AV.tsv\nMV 2530_MV.hea 2530_MV.wav 2530_MV.tsv\n\
             PV 2530_PV.hea 2530_PV.wav 2530_PV.tsv\n#Age: Child\n#Murmur: Present\n#Murmur locations: AV+PV\n",
        )
        .unwrap();
        std::fs::write(
            dir.path().join("9979.txt"),
            "9979 1 4000\nTV 9979_TV.hea 9979_TV.wav 9979_TV.tsv\n#Murmur: Unknown\n#Murmur locations: nan\n",
        )
        .unwrap();
        assert_eq!(detect_layout(dir.path()).unwrap(), DatasetTag::Pcg2022);
        let meta = read_metadata(dir.path()).unwrap();
        assert_eq!(meta.rows.len(), 4);
        assert_eq!(meta.get("2530_AV").unwrap().label, ClassLabel::Present);
        assert_eq!(meta.get("2530_MV").unwrap().label, ClassLabel::Absent);
        assert_eq!(meta.get("2530_PV").unwrap().label, ClassLabel::Present);
        assert_eq!(meta.get("9979_TV").unwrap().label, ClassLabel::Unknown);
        assert_eq!(meta.get("9979_TV").unwrap().sample_rate_hz, Some(4000));
    }

    #[test]
    fn missing_murmur_line_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("1.txt"), "1 1 4000\nAV 1_AV.hea 1_AV.wav\n").unwrap();
        assert!(matches!(read_circor_metadata(dir.path()), Err(CoreError::MissingLabel(_))));
    }

    #[test]
    fn reference_csv_in_subdirectories() {
        let dir = tempfile::tempdir().unwrap();
        let sub = dir.path().join("training-a");
        std::fs::create_dir(&sub).unwrap();
        std::fs::write(sub.join("REFERENCE.csv"), "a0001,1\na0002,-1\n").unwrap();
        assert_eq!(detect_layout(dir.path()).unwrap(), DatasetTag::Pcg2016);
        let meta = read_metadata(dir.path()).unwrap();
        assert_eq!(meta.get("a0001").unwrap().label, ClassLabel::Abnormal);
        assert_eq!(meta.get("a0002").unwrap().label, ClassLabel::Normal);
        assert_eq!(meta.get("a0002").unwrap().location, Location::Single);
        assert_eq!(meta.get("a0002").unwrap().wav_path, sub.join("a0002.wav"));
    }

    #[test]
    fn unknown_layout_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(detect_layout(dir.path()).is_err());
    }
}
