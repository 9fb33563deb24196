//! Synthetic stream generation and flat feature-file ingestion.
//!
//! A stream is an ordered list of session datasets with pairwise disjoint
//! label spaces: one data-rich base session followed by N-way K-shot
//! increments, each with its own test split.
//!
//! # Feature CSV format
//!
//! One header line `label,split,f0,...,f{d-1}`, then one row per example:
//! `label` is a decimal integer, `split` is `train` or `test`, and the
//! remaining fields are the feature coordinates. UTF-8, LF line endings,
//! `.` decimal separator. Floats are written in shortest round-trip form,
//! so an exported stream reloads bit-exactly.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::protocol::SessionSpec;
use crate::seeding::{stream_rng, Stream};

/// A raw example: an external integer label plus pre-extractor coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub label: i64,
    pub values: Vec<f64>,
}

/// Train and test splits for one session.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SessionData {
    pub train: Vec<LabeledExample>,
    pub test: Vec<LabeledExample>,
}

impl SessionData {
    /// Sorted unique labels of the train split.
    pub fn train_labels(&self) -> Vec<i64> {
        let mut labels: Vec<i64> = self.train.iter().map(|e| e.label).collect();
        labels.sort_unstable();
        labels.dedup();
        labels
    }
}

/// Ordered session datasets with disjoint label spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct FscilStream {
    pub base: SessionData,
    pub increments: Vec<SessionData>,
    pub feature_dim: usize,
}

impl FscilStream {
    /// Base session plus all increments.
    pub fn session_count(&self) -> usize {
        1 + self.increments.len()
    }

    /// Union of the test splits of sessions `0..=t` (session 0 is the
    /// base session), the evaluation set after session `t`.
    pub fn cumulative_test(&self, t: usize) -> Vec<LabeledExample> {
        let mut out = self.base.test.clone();
        for inc in self.increments.iter().take(t) {
            out.extend(inc.test.iter().cloned());
        }
        out
    }

    /// Checks dimension consistency, per-session split containment and
    /// disjointness of label spaces across sessions.
    pub fn validate(&self) -> Result<()> {
        if self.feature_dim == 0 {
            return Err(Error::EmptyInput(
                "stream feature dimension must be >= 1".into(),
            ));
        }
        if self.base.train.is_empty() {
            return Err(Error::Protocol("base session has no training data".into()));
        }
        let mut seen: Vec<i64> = Vec::new();
        for (idx, session) in std::iter::once(&self.base)
            .chain(self.increments.iter())
            .enumerate()
        {
            for e in session.train.iter().chain(session.test.iter()) {
                if e.values.len() != self.feature_dim {
                    return Err(Error::ShapeMismatch {
                        context: "stream example",
                        expected: self.feature_dim,
                        actual: e.values.len(),
                    });
                }
                if e.values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite {
                        context: "stream example",
                    });
                }
            }
            let train_labels = session.train_labels();
            for e in &session.test {
                if train_labels.binary_search(&e.label).is_err() {
                    return Err(Error::Protocol(format!(
                        "label {} appears in the test split of session {idx} without training data",
                        e.label
                    )));
                }
            }
            for label in &train_labels {
                if seen.contains(label) {
                    return Err(Error::Protocol(format!(
                        "label {label} appears in more than one session"
                    )));
                }
            }
            seen.extend(train_labels);
        }
        Ok(())
    }
}

/// Parameters of the synthetic Gaussian-mixture stream generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub num_classes: usize,
    pub dim: usize,
    pub samples_per_base_class: usize,
    pub test_per_class: usize,
    /// Radius of the sphere the class centers are drawn on.
    pub center_separation: f64,
    /// Isotropic standard deviation around each center.
    pub within_class_std: f64,
    /// Per-class spread heterogeneity in `[0, 1)`: class `c` uses
    /// `within_class_std * (1 + std_spread * u_c)` with a seeded
    /// `u_c ~ U[-1, 1)`. At 0 every class has the same spread; larger
    /// values mix tight and diffuse classes, which is what makes
    /// per-class boundaries worth learning at all.
    pub std_spread: f64,
    /// Crowds the class centers into a cone: directions are drawn as
    /// `normalize(g + concentration * mu)` for a fixed seeded unit `mu`,
    /// giving pairwise center cosines around
    /// `concentration^2 / (dim + concentration^2)`. At 0 the directions
    /// are isotropic. Embedding spaces behind rectified backbones are
    /// one-sided like this, and the crowding is what puts the inter-class
    /// constraint into play.
    pub center_concentration: f64,
    /// How tightly each incremental session's classes cluster around a
    /// shared (seeded) anchor near the earlier classes, in `[0, 1)`:
    /// member directions are
    /// `normalize(novel_overlap * anchor + (1 - novel_overlap) * g)`.
    /// At 0 novel classes are placed exactly like base classes; larger
    /// values make the arriving classes mutually confusable and close to
    /// old territory, the space conflict incremental sessions have to
    /// resolve.
    pub novel_overlap: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes == 0 || self.dim == 0 || self.samples_per_base_class == 0 {
            return Err(Error::EmptyInput(
                "synthetic spec needs classes, dimensions and samples".into(),
            ));
        }
        if self.test_per_class == 0 {
            return Err(Error::Data {
                line: 0,
                message: "test_per_class must be >= 1, evaluation is impossible without test data"
                    .into(),
            });
        }
        if !(self.center_separation > 0.0) || !(self.within_class_std > 0.0) {
            return Err(Error::Config(
                "center_separation and within_class_std must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.std_spread) {
            return Err(Error::Config("std_spread must lie in [0, 1)".into()));
        }
        if !(self.center_concentration >= 0.0) || !self.center_concentration.is_finite() {
            return Err(Error::Config(
                "center_concentration must be a finite non-negative real".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.novel_overlap) {
            return Err(Error::Config("novel_overlap must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Assigns sorted class labels to sessions: the first `base_class_count`
/// labels form the base session, each increment takes the next `n_way`.
/// With `shuffle_assignment` set, the labels are first permuted by the
/// session seed.
pub fn assign_classes(labels: &[i64], sessions: &SessionSpec) -> Result<Vec<Vec<i64>>> {
    let needed = sessions.total_classes();
    if labels.len() < needed {
        return Err(Error::EmptyInput(format!(
            "need {needed} classes for the session layout, found {}",
            labels.len()
        )));
    }
    let mut ordered = labels.to_vec();
    ordered.sort_unstable();
    if sessions.shuffle_assignment {
        let mut rng = stream_rng(sessions.seed, Stream::ClassAssignment, 0);
        ordered.shuffle(&mut rng);
    }
    let mut cursor = 0usize;
    let mut out = Vec::with_capacity(1 + sessions.sessions.len());
    out.push(ordered[..sessions.base_class_count].to_vec());
    cursor += sessions.base_class_count;
    for inc in &sessions.sessions {
        out.push(ordered[cursor..cursor + inc.n_way].to_vec());
        cursor += inc.n_way;
    }
    Ok(out)
}

/// Draws a synthetic stream: unit-direction class centers scaled by the
/// separation radius, isotropic Gaussian samples around them, classes
/// partitioned into base plus increments, and the first `k_shot` training
/// points kept per incremental class. Deterministic under the spec seed.
pub fn generate_synthetic(spec: &SyntheticSpec, sessions: &SessionSpec) -> Result<FscilStream> {
    spec.validate()?;
    sessions.validate()?;
    if sessions
        .sessions
        .iter()
        .any(|s| s.k_shot > spec.samples_per_base_class)
    {
        return Err(Error::Config(format!(
            "k_shot exceeds the {} samples generated per class",
            spec.samples_per_base_class
        )));
    }

    let mut rng = stream_rng(spec.seed, Stream::Data, 0);
    let gaussian = |n: usize, rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        (0..n)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect()
    };

    // class centers: Gaussian directions (optionally crowded into a cone
    // around a shared direction) rescaled to the separation radius
    let cone_axis: Vec<f64> = if spec.center_concentration > 0.0 {
        loop {
            let g = gaussian(spec.dim, &mut rng);
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                break g.into_iter().map(|v| v / norm).collect();
            }
        }
    } else {
        vec![0.0; spec.dim]
    };
    // session index of each class under ascending assignment: 0 for the
    // base classes, then one batch of n_way per increment
    let mut session_of_class = vec![0usize; spec.num_classes];
    {
        let mut next = sessions.base_class_count;
        for (s, inc) in sessions.sessions.iter().enumerate() {
            for _ in 0..inc.n_way {
                if next < spec.num_classes {
                    session_of_class[next] = s + 1;
                    next += 1;
                }
            }
        }
    }

    let mut unit_dirs: Vec<Vec<f64>> = Vec::with_capacity(spec.num_classes);
    let mut session_anchor: Option<(usize, usize)> = None; // (session, class index)
    for class in 0..spec.num_classes {
        let session = session_of_class[class];
        let anchor = if spec.novel_overlap > 0.0 && session > 0 {
            // one shared anchor per incremental session, drawn among the
            // classes of earlier sessions
            match session_anchor {
                Some((s, a)) if s == session => Some(a),
                _ => {
                    let first_of_session = class;
                    let a = rng.random_range(0..first_of_session);
                    session_anchor = Some((session, a));
                    Some(a)
                }
            }
        } else {
            None
        };
        let dir = loop {
            let mut g = gaussian(spec.dim, &mut rng);
            for (v, axis) in g.iter_mut().zip(&cone_axis) {
                *v += spec.center_concentration * axis;
            }
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            let mut unit: Vec<f64> = g.into_iter().map(|v| v / norm).collect();
            if let Some(a) = anchor {
                for (u, b) in unit.iter_mut().zip(&unit_dirs[a]) {
                    *u = spec.novel_overlap * b + (1.0 - spec.novel_overlap) * *u;
                }
                let norm = unit.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 {
                    continue;
                }
                for u in unit.iter_mut() {
                    *u /= norm;
                }
            }
            break unit;
        };
        unit_dirs.push(dir);
    }
    let centers: Vec<Vec<f64>> = unit_dirs
        .iter()
        .map(|dir| dir.iter().map(|v| v * spec.center_separation).collect())
        .collect();

    // per-class sample pools, in class order
    let mut train_pool: Vec<Vec<Vec<f64>>> = Vec::with_capacity(spec.num_classes);
    let mut test_pool: Vec<Vec<Vec<f64>>> = Vec::with_capacity(spec.num_classes);
    for center in &centers {
        let std = spec.within_class_std * (1.0 + spec.std_spread * rng.random_range(-1.0..1.0));
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
            center
                .iter()
                .map(|c| c + std * rng.sample::<f64, _>(StandardNormal))
                .collect()
        };
        train_pool.push(
            (0..spec.samples_per_base_class)
                .map(|_| draw(&mut rng))
                .collect(),
        );
        test_pool.push((0..spec.test_per_class).map(|_| draw(&mut rng)).collect());
    }

    let labels: Vec<i64> = (0..spec.num_classes as i64).collect();
    let assignment = assign_classes(&labels, sessions)?;

    let session_data = |class_labels: &[i64], shots: Option<usize>| -> SessionData {
        let mut data = SessionData::default();
        for &label in class_labels {
            let class = label as usize;
            let take = shots.unwrap_or(spec.samples_per_base_class);
            for values in train_pool[class].iter().take(take) {
                data.train.push(LabeledExample {
                    label,
                    values: values.clone(),
                });
            }
            for values in &test_pool[class] {
                data.test.push(LabeledExample {
                    label,
                    values: values.clone(),
                });
            }
        }
        data
    };

    let base = session_data(&assignment[0], None);
    let increments = assignment[1..]
        .iter()
        .zip(&sessions.sessions)
        .map(|(classes, inc)| session_data(classes, Some(inc.k_shot)))
        .collect();

    let stream = FscilStream {
        base,
        increments,
        feature_dim: spec.dim,
    };
    stream.validate()?;
    Ok(stream)
}

fn write_row(out: &mut impl Write, example: &LabeledExample, split: &str) -> Result<()> {
    write!(out, "{},{}", example.label, split)?;
    for v in &example.values {
        write!(out, ",{v}")?;
    }
    out.write_all(b"\n")?;
    Ok(())
}

/// Writes a stream in the feature CSV format, one session after another,
/// rows grouped by class in ascending label order.
pub fn write_feature_csv(stream: &FscilStream, out: &mut impl Write) -> Result<()> {
    stream.validate()?;
    write!(out, "label,split")?;
    for i in 0..stream.feature_dim {
        write!(out, ",f{i}")?;
    }
    out.write_all(b"\n")?;

    for session in std::iter::once(&stream.base).chain(stream.increments.iter()) {
        for &label in &session.train_labels() {
            for e in session.train.iter().filter(|e| e.label == label) {
                write_row(out, e, "train")?;
            }
            for e in session.test.iter().filter(|e| e.label == label) {
                write_row(out, e, "test")?;
            }
        }
    }
    Ok(())
}

/// Writes the feature CSV to a file path.
pub fn export_feature_csv(stream: &FscilStream, path: impl AsRef<Path>) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_feature_csv(stream, &mut file)?;
    file.flush()?;
    Ok(())
}

struct ClassRows {
    train: Vec<(usize, Vec<f64>)>,
    test: Vec<(usize, Vec<f64>)>,
}

/// Parses the feature CSV format from any reader. Classes are assigned to
/// sessions in ascending label order; incremental classes keep their first
/// `k_shot` train rows in file order.
pub fn read_feature_csv(reader: impl Read, sessions: &SessionSpec) -> Result<FscilStream> {
    sessions.validate()?;
    let mut lines = BufReader::new(reader).lines();
    let header = match lines.next() {
        Some(line) => line?,
        None => {
            return Err(Error::Data {
                line: 1,
                message: "missing header line".into(),
            })
        }
    };
    let fields: Vec<&str> = header.trim_end_matches('\r').split(',').collect();
    if fields.len() < 3 || fields[0] != "label" || fields[1] != "split" {
        return Err(Error::Data {
            line: 1,
            message: "header must be `label,split,f0,...`".into(),
        });
    }
    for (i, name) in fields[2..].iter().enumerate() {
        if *name != format!("f{i}") {
            return Err(Error::Data {
                line: 1,
                message: format!("expected header field `f{i}`, found `{name}`"),
            });
        }
    }
    let dim = fields.len() - 2;

    let mut classes: BTreeMap<i64, ClassRows> = BTreeMap::new();
    let mut line_no = 1usize;
    for line in lines {
        line_no += 1;
        let line = line?;
        let row = line.trim_end_matches('\r');
        if row.is_empty() {
            continue;
        }
        let parts: Vec<&str> = row.split(',').collect();
        if parts.len() != dim + 2 {
            return Err(Error::Data {
                line: line_no,
                message: format!("expected {} fields, got {}", dim + 2, parts.len()),
            });
        }
        let label: i64 = parts[0].parse().map_err(|_| Error::Data {
            line: line_no,
            message: format!("invalid label `{}`", parts[0]),
        })?;
        let mut values = Vec::with_capacity(dim);
        for (i, field) in parts[2..].iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Data {
                line: line_no,
                message: format!("invalid float `{field}` in field f{i}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Data {
                    line: line_no,
                    message: format!("non-finite value in field f{i}"),
                });
            }
            values.push(v);
        }
        let entry = classes.entry(label).or_insert_with(|| ClassRows {
            train: Vec::new(),
            test: Vec::new(),
        });
        match parts[1] {
            "train" => entry.train.push((line_no, values)),
            "test" => entry.test.push((line_no, values)),
            other => {
                return Err(Error::Data {
                    line: line_no,
                    message: format!("split must be `train` or `test`, found `{other}`"),
                });
            }
        }
    }

    let labels: Vec<i64> = classes.keys().copied().collect();
    let needed = sessions.total_classes();
    if labels.len() != needed {
        return Err(Error::Data {
            line: line_no,
            message: format!(
                "file holds {} classes but the session layout consumes exactly {needed}",
                labels.len()
            ),
        });
    }
    let assignment = assign_classes(&labels, sessions)?;

    let collect_session = |class_labels: &[i64],
                           shots: Option<usize>,
                           classes: &BTreeMap<i64, ClassRows>|
     -> Result<SessionData> {
        let mut data = SessionData::default();
        for &label in class_labels {
            let rows = &classes[&label];
            if rows.train.is_empty() {
                let line = rows.test.first().map(|(l, _)| *l).unwrap_or(1);
                return Err(Error::Data {
                    line,
                    message: format!("class {label} has no train rows"),
                });
            }
            if let Some(k) = shots {
                if rows.train.len() < k {
                    let line = rows.train.last().map(|(l, _)| *l).unwrap_or(1);
                    return Err(Error::Data {
                        line,
                        message: format!(
                            "class {label} has {} train rows, k_shot needs {k}",
                            rows.train.len()
                        ),
                    });
                }
            }
            let take = shots.unwrap_or(rows.train.len());
            for (_, values) in rows.train.iter().take(take) {
                data.train.push(LabeledExample {
                    label,
                    values: values.clone(),
                });
            }
            for (_, values) in &rows.test {
                data.test.push(LabeledExample {
                    label,
                    values: values.clone(),
                });
            }
        }
        Ok(data)
    };

    let base = collect_session(&assignment[0], None, &classes)?;
    let mut increments = Vec::with_capacity(sessions.sessions.len());
    for (class_labels, inc) in assignment[1..].iter().zip(&sessions.sessions) {
        increments.push(collect_session(class_labels, Some(inc.k_shot), &classes)?);
    }

    let stream = FscilStream {
        base,
        increments,
        feature_dim: dim,
    };
    stream.validate()?;
    Ok(stream)
}

/// Reads the feature CSV format from a file path.
pub fn load_feature_csv(path: impl AsRef<Path>, sessions: &SessionSpec) -> Result<FscilStream> {
    read_feature_csv(std::fs::File::open(path)?, sessions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::IncrementSpec;

    fn sessions(base: usize, incs: &[(usize, usize)]) -> SessionSpec {
        SessionSpec {
            base_class_count: base,
            sessions: incs
                .iter()
                .map(|&(n_way, k_shot)| IncrementSpec { n_way, k_shot })
                .collect(),
            seed: 0,
            shuffle_assignment: false,
        }
    }

    fn small_spec() -> SyntheticSpec {
        SyntheticSpec {
            num_classes: 6,
            dim: 4,
            samples_per_base_class: 8,
            test_per_class: 3,
            center_separation: 1.0,
            within_class_std: 0.2,
            std_spread: 0.0,
            center_concentration: 0.0,
            novel_overlap: 0.0,
            seed: 11,
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = small_spec();
        let layout = sessions(4, &[(2, 3)]);
        let a = generate_synthetic(&spec, &layout).unwrap();
        let b = generate_synthetic(&spec, &layout).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tiny_spread_collapses_to_centers() {
        let spec = SyntheticSpec {
            within_class_std: 1e-12,
            ..small_spec()
        };
        let layout = sessions(4, &[(2, 3)]);
        let stream = generate_synthetic(&spec, &layout).unwrap();
        // all samples of a class sit on the class center
        let first = &stream.base.train[0];
        for e in stream.base.train.iter().filter(|e| e.label == first.label) {
            for (a, b) in e.values.iter().zip(&first.values) {
                assert!((a - b).abs() < 1e-9);
            }
        }
        // and any downstream classifier is perfect: plain prototype
        // inference scores 1.0 on every session
        let cfg = crate::protocol::TrainConfig {
            base_epochs: 0,
            ablation: crate::protocol::Ablation::FixedBaseline,
            ..crate::protocol::TrainConfig::default()
        };
        let extractor = crate::embedding::FeatureExtractor::identity(spec.dim).unwrap();
        let reports = crate::protocol::run_full(&stream, &cfg, extractor).unwrap();
        for r in &reports {
            assert_eq!(r.top1_accuracy, 1.0);
        }
    }

    #[test]
    fn session_layout_arithmetic() {
        let spec = SyntheticSpec {
            num_classes: 18,
            dim: 16,
            samples_per_base_class: 20,
            test_per_class: 4,
            center_separation: 1.0,
            within_class_std: 0.3,
            std_spread: 0.0,
            center_concentration: 0.0,
            novel_overlap: 0.0,
            seed: 5,
        };
        let layout = sessions(10, &[(2, 5), (2, 5), (2, 5), (2, 5)]);
        let stream = generate_synthetic(&spec, &layout).unwrap();
        assert_eq!(stream.session_count(), 5);
        let mut total = stream.base.train_labels().len();
        for inc in &stream.increments {
            assert_eq!(inc.train.len(), 10); // 2-way x 5-shot
            total += inc.train_labels().len();
        }
        assert_eq!(total, 18);
    }

    #[test]
    fn insufficient_classes_is_an_arity_error() {
        let spec = small_spec(); // 6 classes
        let layout = sessions(4, &[(2, 3), (2, 3)]); // needs 8
        assert!(matches!(
            generate_synthetic(&spec, &layout),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn zero_test_per_class_is_a_data_error() {
        let spec = SyntheticSpec {
            test_per_class: 0,
            ..small_spec()
        };
        assert!(matches!(
            generate_synthetic(&spec, &sessions(4, &[])),
            Err(Error::Data { .. })
        ));
    }

    #[test]
    fn streams_have_disjoint_sessions() {
        let spec = small_spec();
        let layout = sessions(2, &[(2, 3), (2, 3)]);
        let stream = generate_synthetic(&spec, &layout).unwrap();
        stream.validate().unwrap();
        let base: Vec<i64> = stream.base.train_labels();
        for inc in &stream.increments {
            for label in inc.train_labels() {
                assert!(!base.contains(&label));
            }
        }
    }

    #[test]
    fn shuffled_assignment_is_seed_determined() {
        let spec = small_spec();
        let mut layout = sessions(4, &[(2, 3)]);
        layout.shuffle_assignment = true;
        layout.seed = 3;
        let a = generate_synthetic(&spec, &layout).unwrap();
        let b = generate_synthetic(&spec, &layout).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_round_trip_is_identity() {
        let spec = small_spec();
        let layout = sessions(4, &[(2, 3)]);
        let stream = generate_synthetic(&spec, &layout).unwrap();
        let mut buf = Vec::new();
        write_feature_csv(&stream, &mut buf).unwrap();
        let reloaded = read_feature_csv(buf.as_slice(), &layout).unwrap();
        assert_eq!(stream, reloaded);
    }

    #[test]
    fn single_class_file_loads_as_base_only_stream() {
        let csv = "label,split,f0,f1\n0,train,1.0,2.0\n0,test,1.5,2.5\n";
        let stream = read_feature_csv(csv.as_bytes(), &sessions(1, &[])).unwrap();
        assert_eq!(stream.session_count(), 1);
        assert_eq!(stream.base.train.len(), 1);
        assert_eq!(stream.base.test.len(), 1);
        assert_eq!(stream.feature_dim, 2);
    }

    #[test]
    fn ragged_row_errors_with_line_number() {
        let csv = "label,split,f0,f1\n0,train,1.0,2.0\n0,train,1.0\n";
        let err = read_feature_csv(csv.as_bytes(), &sessions(1, &[])).unwrap_err();
        match err {
            Error::Data { line, .. } => assert_eq!(line, 3),
            other => panic!("expected data error, got {other:?}"),
        }
    }

    #[test]
    fn non_numeric_field_errors_with_line_number() {
        let csv = "label,split,f0,f1\n0,train,1.0,abc\n";
        let err = read_feature_csv(csv.as_bytes(), &sessions(1, &[])).unwrap_err();
        match err {
            Error::Data { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("abc"));
            }
            other => panic!("expected data error, got {other:?}"),
        }
    }

    #[test]
    fn bad_split_and_short_shots_are_reported() {
        let csv = "label,split,f0\n0,validation,1.0\n";
        let err = read_feature_csv(csv.as_bytes(), &sessions(1, &[])).unwrap_err();
        assert!(matches!(err, Error::Data { line: 2, .. }));

        let csv = "label,split,f0\n0,train,1.0\n0,test,1.0\n1,train,2.0\n1,test,2.0\n";
        let err = read_feature_csv(csv.as_bytes(), &sessions(1, &[(1, 3)])).unwrap_err();
        match err {
            Error::Data { line, message } => {
                assert_eq!(line, 4);
                assert!(message.contains("k_shot"));
            }
            other => panic!("expected data error, got {other:?}"),
        }
    }

    #[test]
    fn k_shot_is_enforced_exactly() {
        let spec = small_spec();
        let layout = sessions(2, &[(2, 2), (2, 4)]);
        let stream = generate_synthetic(&spec, &layout).unwrap();
        assert_eq!(stream.increments[0].train.len(), 4);
        assert_eq!(stream.increments[1].train.len(), 8);
        let mut buf = Vec::new();
        write_feature_csv(&stream, &mut buf).unwrap();
        let reloaded = read_feature_csv(buf.as_slice(), &layout).unwrap();
        for (inc, spec) in reloaded.increments.iter().zip(&layout.sessions) {
            for label in inc.train_labels() {
                let count = inc.train.iter().filter(|e| e.label == label).count();
                assert_eq!(count, spec.k_shot);
            }
        }
    }
}
