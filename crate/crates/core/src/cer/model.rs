//! Averaged multi-class perceptron over sparse string features.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{self, Read, Write};
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::features::{context_features, FeatureSpec};
use super::{CerError, TrainingExample};

const MODEL_FORMAT_VERSION: u32 = 1;

/// Class labels as they appear in the training data. The true name is
/// always `ANON`; the other candidates are `DUMBO1`, `DUMBO2`, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassLabel {
    Anon,
    Dumbo(u32),
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassLabel::Anon => f.write_str("ANON"),
            ClassLabel::Dumbo(i) => write!(f, "DUMBO{i}"),
        }
    }
}

impl FromStr for ClassLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "ANON" {
            return Ok(ClassLabel::Anon);
        }
        s.strip_prefix("DUMBO")
            .and_then(|n| n.parse().ok())
            .map(ClassLabel::Dumbo)
            .ok_or_else(|| format!("bad class label {s:?}"))
    }
}

impl Serialize for ClassLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ClassLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassInfo {
    pub label: ClassLabel,
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub epochs: usize,
    /// Examples kept per class; larger classes are downsampled.
    pub class_cap: usize,
    pub seed: u64,
    pub features: FeatureSpec,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            epochs: 5,
            class_cap: 500,
            seed: 0,
            features: FeatureSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingSummary {
    /// Examples used per class, after downsampling, in class order.
    pub examples_per_class: Vec<usize>,
    pub epochs: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CerModel {
    classes: Vec<ClassInfo>,
    spec: FeatureSpec,
    feature_ids: HashMap<String, usize>,
    /// Row-major: `weights[feature * classes + class]`.
    weights: Vec<f64>,
    summary: TrainingSummary,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    classes: Vec<ClassInfo>,
    feature_spec: FeatureSpec,
    summary: TrainingSummary,
    weights: BTreeMap<String, Vec<f64>>,
}

impl CerModel {
    pub fn classes(&self) -> &[ClassInfo] {
        &self.classes
    }

    pub fn feature_spec(&self) -> FeatureSpec {
        self.spec
    }

    pub fn summary(&self) -> &TrainingSummary {
        &self.summary
    }

    pub fn feature_count(&self) -> usize {
        self.feature_ids.len()
    }

    /// Per-class weights of one feature.
    pub fn weights_of(&self, feature: &str) -> Option<&[f64]> {
        let k = self.classes.len();
        self.feature_ids
            .get(feature)
            .map(|&f| &self.weights[f * k..(f + 1) * k])
    }

    /// Class scores for a context. Unknown features contribute nothing.
    pub fn score(&self, left: &[String], right: &[String]) -> Vec<f64> {
        let k = self.classes.len();
        let mut scores = vec![0.0; k];
        for feat in context_features(left, right, self.spec) {
            if let Some(&f) = self.feature_ids.get(&feat) {
                for (s, w) in scores.iter_mut().zip(&self.weights[f * k..(f + 1) * k]) {
                    *s += w;
                }
            }
        }
        scores
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<(), CerError> {
        let k = self.classes.len();
        let mut names: Vec<(&String, &usize)> = self.feature_ids.iter().collect();
        names.sort();
        let weights = names
            .into_iter()
            .map(|(n, &f)| (n.clone(), self.weights[f * k..(f + 1) * k].to_vec()))
            .collect();
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            classes: self.classes.clone(),
            feature_spec: self.spec,
            summary: self.summary.clone(),
            weights,
        };
        serde_json::to_writer(writer, &file).map_err(|e| CerError::Format(e.to_string()))
    }

    pub fn read_json<R: Read>(reader: R) -> Result<Self, CerError> {
        let file: ModelFile =
            serde_json::from_reader(reader).map_err(|e| CerError::Format(e.to_string()))?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(CerError::Format(format!(
                "unsupported model format version {}",
                file.format_version
            )));
        }
        let k = file.classes.len();
        let mut feature_ids = HashMap::with_capacity(file.weights.len());
        let mut weights = Vec::with_capacity(file.weights.len() * k);
        for (name, row) in file.weights {
            if row.len() != k {
                return Err(CerError::Format(format!(
                    "feature {name:?} has {} weights",
                    row.len()
                )));
            }
            feature_ids.insert(name, feature_ids.len());
            weights.extend(row);
        }
        Ok(CerModel {
            classes: file.classes,
            spec: file.feature_spec,
            feature_ids,
            weights,
            summary: file.summary,
        })
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<(), CerError> {
        crate::write_atomic(path.as_ref(), |w| {
            self.write_json(w)
                .map_err(|e| io::Error::other(e.to_string()))
        })
        .map_err(CerError::Io)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, CerError> {
        let file = std::fs::File::open(path)?;
        Self::read_json(io::BufReader::new(file))
    }
}

/// Index of the highest score; ties go to the earliest class.
pub fn argmax(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.is_none_or(|b| s > scores[b]) {
            best = Some(i);
        }
    }
    best
}

struct Averaged {
    w: Vec<f64>,
    total: Vec<f64>,
    stamp: Vec<u64>,
    clock: u64,
}

impl Averaged {
    fn bump(&mut self, i: usize, delta: f64) {
        self.total[i] += (self.clock - self.stamp[i]) as f64 * self.w[i];
        self.stamp[i] = self.clock;
        self.w[i] += delta;
    }

    fn finish(mut self) -> Vec<f64> {
        if self.clock == 0 {
            return self.w;
        }
        for i in 0..self.w.len() {
            self.total[i] += (self.clock - self.stamp[i]) as f64 * self.w[i];
        }
        let n = self.clock as f64;
        self.total.into_iter().map(|t| t / n).collect()
    }
}

/// Trains one model over `classes`. Examples whose label is not in
/// `classes` are ignored.
pub fn train(
    examples: &[TrainingExample],
    classes: &[ClassInfo],
    hyper: Hyperparameters,
) -> Result<CerModel, CerError> {
    let k = classes.len();
    let class_of: HashMap<ClassLabel, usize> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.label, i))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut by_class: Vec<Vec<&TrainingExample>> = vec![Vec::new(); k];
    for ex in examples {
        if let Some(&c) = class_of.get(&ex.label) {
            by_class[c].push(ex);
        }
    }
    for group in &mut by_class {
        if group.len() > hyper.class_cap {
            let mut keep = index::sample(&mut rng, group.len(), hyper.class_cap).into_vec();
            keep.sort_unstable();
            *group = keep.into_iter().map(|i| group[i]).collect();
        }
    }
    if by_class.iter().filter(|g| !g.is_empty()).count() < 2 {
        return Err(CerError::EmptyTrainingSet);
    }

    let mut feature_ids: HashMap<String, usize> = HashMap::new();
    let mut data: Vec<(Vec<usize>, usize)> = Vec::new();
    for (c, group) in by_class.iter().enumerate() {
        for ex in group {
            let ids = context_features(&ex.left_context, &ex.right_context, hyper.features)
                .into_iter()
                .map(|f| {
                    let next = feature_ids.len();
                    *feature_ids.entry(f).or_insert(next)
                })
                .collect();
            data.push((ids, c));
        }
    }

    let size = feature_ids.len() * k;
    let mut state = Averaged {
        w: vec![0.0; size],
        total: vec![0.0; size],
        stamp: vec![0; size],
        clock: 0,
    };
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut scores = vec![0.0; k];
    for _ in 0..hyper.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let (feats, gold) = &data[i];
            scores.iter_mut().for_each(|s| *s = 0.0);
            for &f in feats {
                for (c, s) in scores.iter_mut().enumerate() {
                    *s += state.w[f * k + c];
                }
            }
            let pred = argmax(&scores).expect("at least two classes");
            if pred != *gold {
                for &f in feats {
                    state.bump(f * k + gold, 1.0);
                    state.bump(f * k + pred, -1.0);
                }
            }
            state.clock += 1;
        }
    }

    Ok(CerModel {
        classes: classes.to_vec(),
        spec: hyper.features,
        feature_ids,
        weights: state.finish(),
        summary: TrainingSummary {
            examples_per_class: by_class.iter().map(Vec::len).collect(),
            epochs: hyper.epochs,
            seed: hyper.seed,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classes(n: usize) -> Vec<ClassInfo> {
        (0..n)
            .map(|i| ClassInfo {
                label: if i == 0 {
                    ClassLabel::Anon
                } else {
                    ClassLabel::Dumbo(i as u32)
                },
                name: format!("Name {i}"),
            })
            .collect()
    }

    fn example(label: ClassLabel, left: &str, right: &str) -> TrainingExample {
        TrainingExample {
            label,
            doc_id: "d".into(),
            left_context: left.split_whitespace().map(String::from).collect(),
            right_context: right.split_whitespace().map(String::from).collect(),
            masked_text: String::new(),
            mask_span: (0, 0),
        }
    }

    #[test]
    fn labels_round_trip() {
        for l in [
            ClassLabel::Anon,
            ClassLabel::Dumbo(1),
            ClassLabel::Dumbo(12),
        ] {
            assert_eq!(l.to_string().parse::<ClassLabel>().unwrap(), l);
            let json = serde_json::to_string(&l).unwrap();
            assert_eq!(serde_json::from_str::<ClassLabel>(&json).unwrap(), l);
        }
        assert_eq!(ClassLabel::Dumbo(3).to_string(), "DUMBO3");
        assert!("DUMBO".parse::<ClassLabel>().is_err());
        assert!("anon".parse::<ClassLabel>().is_err());
    }

    #[test]
    fn separable_set_is_learned() {
        let cls = classes(2);
        let mut data = Vec::new();
        for i in 0..20 {
            data.push(example(
                ClassLabel::Anon,
                &format!("senator from ohio {i}"),
                "voted",
            ));
            data.push(example(
                ClassLabel::Dumbo(1),
                &format!("swimmer gold {i}"),
                "medal",
            ));
        }
        let model = train(&data, &cls, Hyperparameters::default()).unwrap();
        for ex in &data {
            let pred = argmax(&model.score(&ex.left_context, &ex.right_context)).unwrap();
            assert_eq!(cls[pred].label, ex.label);
        }
        assert_eq!(model.summary().examples_per_class, [20, 20]);
    }

    #[test]
    fn one_class_is_not_enough() {
        let data = vec![example(ClassLabel::Anon, "a", "b")];
        assert!(matches!(
            train(&data, &classes(3), Hyperparameters::default()),
            Err(CerError::EmptyTrainingSet)
        ));
        assert!(matches!(
            train(&[], &classes(2), Hyperparameters::default()),
            Err(CerError::EmptyTrainingSet)
        ));
    }

    #[test]
    fn class_cap_downsamples() {
        let cls = classes(2);
        let mut data: Vec<_> = (0..30)
            .map(|i| example(ClassLabel::Anon, &format!("x{i}"), ""))
            .collect();
        data.extend((0..5).map(|i| example(ClassLabel::Dumbo(1), &format!("y{i}"), "")));
        let hyper = Hyperparameters {
            class_cap: 10,
            ..Default::default()
        };
        let model = train(&data, &cls, hyper).unwrap();
        assert_eq!(model.summary().examples_per_class, [10, 5]);
        assert_eq!(model, train(&data, &cls, hyper).unwrap());
    }

    #[test]
    fn argmax_prefers_first_on_ties() {
        assert_eq!(argmax(&[0.0, 0.0, 0.0]), Some(0));
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), Some(1));
        assert_eq!(argmax(&[]), None);
        assert_eq!(argmax(&[-2.0, -1.0]), Some(1));
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let cls = classes(3);
        let data: Vec<_> = (0..30)
            .map(|i| {
                example(
                    cls[i % 3].label,
                    &format!("w{} v{}", i % 7, i % 5),
                    &format!("u{}", i % 4),
                )
            })
            .collect();
        let model = train(&data, &cls, Hyperparameters::default()).unwrap();
        let mut buf = Vec::new();
        model.write_json(&mut buf).unwrap();
        let back = CerModel::read_json(buf.as_slice()).unwrap();
        assert_eq!(back.classes(), model.classes());
        assert_eq!(back.feature_count(), model.feature_count());
        for f in model.feature_ids.keys() {
            let (a, b) = (model.weights_of(f).unwrap(), back.weights_of(f).unwrap());
            assert!(
                a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()),
                "{f}"
            );
        }
        let mut again = Vec::new();
        back.write_json(&mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn rejects_unknown_version() {
        let bad = r#"{"format_version":99,"classes":[],"feature_spec":{"window":8,"bigrams":true},
            "summary":{"examples_per_class":[],"epochs":5,"seed":0},"weights":{}}"#;
        assert!(matches!(
            CerModel::read_json(bad.as_bytes()),
            Err(CerError::Format(_))
        ));
    }
}
