use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Collapsed Gibbs LDA settings. `alpha = None` means `50 / topics`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaConfig {
    pub topics: usize,
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub inference_sweeps: usize,
}

impl Default for LdaConfig {
    fn default() -> Self {
        Self {
            topics: 20,
            alpha: None,
            beta: 0.01,
            iterations: 200,
            inference_sweeps: 20,
        }
    }
}

impl LdaConfig {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.topics as f64)
    }
}

/// LDA topic model. φ is derived from integer topic-word counts, so the
/// counts alone reproduce the model exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct TopicModel {
    k: usize,
    alpha: f64,
    beta: f64,
    inference_sweeps: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    counts: Vec<u32>,
    phi: Vec<f64>,
    trained: bool,
}

impl TopicModel {
    /// An untrained placeholder; every inference call on it fails.
    pub fn untrained(config: &LdaConfig) -> Self {
        Self {
            k: config.topics,
            alpha: config.alpha(),
            beta: config.beta,
            inference_sweeps: config.inference_sweeps,
            words: Vec::new(),
            index: HashMap::new(),
            counts: Vec::new(),
            phi: Vec::new(),
            trained: false,
        }
    }

    /// Rebuilds a trained model from topic-major counts (`K × V`).
    pub fn from_counts(config: &LdaConfig, words: Vec<String>, counts: Vec<u32>) -> Result<Self> {
        if config.topics < 2 {
            return Err(Error::InvalidArgument("topic model needs at least 2 topics".into()));
        }
        if words.is_empty() || counts.len() != config.topics * words.len() {
            return Err(Error::Shape(format!(
                "topic counts have {} entries, expected {} x {}",
                counts.len(),
                config.topics,
                words.len()
            )));
        }
        let mut model = Self::untrained(config);
        model.index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        model.words = words;
        model.counts = counts;
        model.phi = compute_phi(&model.counts, model.k, model.words.len(), model.beta);
        model.trained = true;
        Ok(model)
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    pub fn topics(&self) -> usize {
        self.k
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn inference_sweeps(&self) -> usize {
        self.inference_sweeps
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Row `k` of φ.
    pub fn phi(&self, k: usize) -> &[f64] {
        let v = self.words.len();
        &self.phi[k * v..(k + 1) * v]
    }

    /// The `n` most probable words of topic `k`, ties broken by word.
    pub fn top_words(&self, k: usize, n: usize) -> Vec<&str> {
        let row = self.phi(k);
        let mut order: Vec<usize> = (0..row.len()).collect();
        order.sort_by(|&a, &b| {
            row[b]
                .total_cmp(&row[a])
                .then_with(|| self.words[a].cmp(&self.words[b]))
        });
        order.into_iter().take(n).map(|i| self.words[i].as_str()).collect()
    }

    /// Topic mixture of a document by Gibbs sampling against fixed φ. The
    /// chain is seeded from the document's in-vocabulary word ids, so equal
    /// documents get equal mixtures. A document with no known words gets the
    /// uniform mixture.
    pub fn infer(&self, doc: &[String]) -> Result<Vec<f64>> {
        if !self.trained {
            return Err(Error::UntrainedModel);
        }
        let ids: Vec<usize> = doc.iter().filter_map(|w| self.index.get(w).copied()).collect();
        let k = self.k;
        if ids.is_empty() {
            return Ok(vec![1.0 / k as f64; k]);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(ids.iter().flat_map(|&i| (i as u64).to_le_bytes())));
        let v = self.words.len();
        let mut z: Vec<usize> = ids.iter().map(|_| rng.gen_range(0..k)).collect();
        let mut n_dk = vec![0u32; k];
        for &t in &z {
            n_dk[t] += 1;
        }
        let mut p = vec![0.0; k];
        for _ in 0..self.inference_sweeps {
            for (i, &w) in ids.iter().enumerate() {
                n_dk[z[i]] -= 1;
                for t in 0..k {
                    p[t] = (n_dk[t] as f64 + self.alpha) * self.phi[t * v + w];
                }
                z[i] = sample(&p, &mut rng);
                n_dk[z[i]] += 1;
            }
        }
        let denom = ids.len() as f64 + k as f64 * self.alpha;
        Ok(n_dk.iter().map(|&n| (n as f64 + self.alpha) / denom).collect())
    }
}

fn compute_phi(counts: &[u32], k: usize, v: usize, beta: f64) -> Vec<f64> {
    let mut phi = vec![0.0; k * v];
    for t in 0..k {
        let row = &counts[t * v..(t + 1) * v];
        let total: f64 = row.iter().map(|&c| c as f64).sum::<f64>() + v as f64 * beta;
        for (w, &c) in row.iter().enumerate() {
            phi[t * v + w] = (c as f64 + beta) / total;
        }
    }
    phi
}

fn sample(weights: &[f64], rng: &mut impl Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

fn fnv1a(bytes: impl IntoIterator<Item = u8>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Fits LDA by collapsed Gibbs sampling over documents whose stopwords have
/// already been removed.
pub fn fit_topics(docs: &[Vec<String>], config: &LdaConfig, seed: u64) -> Result<TopicModel> {
    let k = config.topics;
    if k < 2 {
        return Err(Error::InvalidArgument("topic model needs at least 2 topics".into()));
    }
    let vocab: BTreeSet<&String> = docs.iter().flatten().collect();
    if vocab.is_empty() {
        return Err(Error::InvalidArgument("topic vocabulary is empty".into()));
    }
    let words: Vec<String> = vocab.into_iter().cloned().collect();
    let index: HashMap<&str, usize> = words.iter().enumerate().map(|(i, w)| (w.as_str(), i)).collect();
    let v = words.len();
    let (alpha, beta) = (config.alpha(), config.beta);
    let vbeta = v as f64 * beta;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let docs: Vec<Vec<usize>> = docs
        .iter()
        .map(|d| d.iter().map(|w| index[w.as_str()]).collect())
        .collect();
    let mut z: Vec<Vec<usize>> = docs
        .iter()
        .map(|d| d.iter().map(|_| rng.gen_range(0..k)).collect())
        .collect();
    let mut n_dk = vec![0u32; docs.len() * k];
    let mut n_kw = vec![0u32; k * v];
    let mut n_k = vec![0u32; k];
    for (d, doc) in docs.iter().enumerate() {
        for (i, &w) in doc.iter().enumerate() {
            let t = z[d][i];
            n_dk[d * k + t] += 1;
            n_kw[t * v + w] += 1;
            n_k[t] += 1;
        }
    }

    let mut p = vec![0.0; k];
    for _ in 0..config.iterations {
        for (d, doc) in docs.iter().enumerate() {
            for (i, &w) in doc.iter().enumerate() {
                let old = z[d][i];
                n_dk[d * k + old] -= 1;
                n_kw[old * v + w] -= 1;
                n_k[old] -= 1;
                for t in 0..k {
                    p[t] = (n_dk[d * k + t] as f64 + alpha) * (n_kw[t * v + w] as f64 + beta) / (n_k[t] as f64 + vbeta);
                }
                let new = sample(&p, &mut rng);
                z[d][i] = new;
                n_dk[d * k + new] += 1;
                n_kw[new * v + w] += 1;
                n_k[new] += 1;
            }
        }
    }
    TopicModel::from_counts(config, words, n_kw)
}

/// Jensen-Shannon divergence in bits. Both arguments must be distributions
/// of equal length.
pub fn jensen_shannon(p: &[f64], q: &[f64]) -> f64 {
    let mut js = 0.0;
    for (&x, &y) in p.iter().zip(q) {
        let (a, b) = if x <= y { (x, y) } else { (y, x) };
        let m = 0.5 * (a + b);
        if a > 0.0 {
            js += 0.5 * a * (a / m).log2();
        }
        if b > 0.0 {
            js += 0.5 * b * (b / m).log2();
        }
    }
    js.clamp(0.0, 1.0)
}

/// Jensen-Shannon divergence between the inferred mixtures of the context
/// words and the response words.
pub fn topic_divergence(model: &TopicModel, context: &[String], response: &[String]) -> Result<f64> {
    let a = model.infer(context)?;
    let b = model.infer(response)?;
    Ok(jensen_shannon(&a, &b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;

    const GROUP_A: [&str; 12] = [
        "jedi",
        "sith",
        "empire",
        "lightsaber",
        "galaxy",
        "droid",
        "rebel",
        "starship",
        "vader",
        "yoda",
        "force",
        "clone",
    ];
    const GROUP_B: [&str; 12] = [
        "goal", "striker", "league", "referee", "penalty", "keeper", "stadium", "derby", "midfield", "corner",
        "offside", "trophy",
    ];

    fn two_groups() -> Vec<Vec<String>> {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut docs = Vec::new();
        for i in 0..40 {
            let group = if i % 2 == 0 { &GROUP_A } else { &GROUP_B };
            docs.push((0..80).map(|_| group.choose(&mut rng).unwrap().to_string()).collect());
        }
        docs
    }

    fn small(iterations: usize) -> LdaConfig {
        LdaConfig {
            topics: 2,
            iterations,
            ..LdaConfig::default()
        }
    }

    fn row_sums_ok(model: &TopicModel) -> bool {
        (0..model.topics()).all(|k| (model.phi(k).iter().sum::<f64>() - 1.0).abs() < 1e-9)
    }

    #[test]
    fn disjoint_groups_give_pure_topics() {
        let model = fit_topics(&two_groups(), &small(200), 3).unwrap();
        for k in 0..2 {
            let top = model.top_words(k, 10);
            let in_a = top.iter().filter(|w| GROUP_A.contains(w)).count();
            let purity = in_a.max(top.len() - in_a) as f64 / top.len() as f64;
            assert!(purity >= 0.9, "topic {k} purity {purity}: {top:?}");
        }
    }

    #[test]
    fn divergence_between_groups_is_large() {
        // The default prior of 50/K pulls short-text mixtures toward uniform.
        let config = LdaConfig {
            alpha: Some(0.1),
            ..small(200)
        };
        let model = fit_topics(&two_groups(), &config, 3).unwrap();
        let a: Vec<String> = GROUP_A[..6].iter().map(|s| s.to_string()).collect();
        let b: Vec<String> = GROUP_B[..6].iter().map(|s| s.to_string()).collect();
        assert!(topic_divergence(&model, &a, &b).unwrap() >= 0.5);
        assert!(topic_divergence(&model, &a, &a).unwrap() <= 0.05);
    }

    #[test]
    fn rows_sum_to_one_after_every_sweep() {
        for it in 0..=6 {
            assert!(row_sums_ok(&fit_topics(&two_groups(), &small(it), 11).unwrap()));
        }
        let single = fit_topics(&[vec!["word".to_string()]], &small(5), 0).unwrap();
        assert!(row_sums_ok(&single));
    }

    #[test]
    fn same_seed_same_phi() {
        let a = fit_topics(&two_groups(), &small(20), 5).unwrap();
        let b = fit_topics(&two_groups(), &small(20), 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            fit_topics(&[vec![]], &small(5), 0),
            Err(Error::InvalidArgument(_))
        ));
        let one = LdaConfig {
            topics: 1,
            ..LdaConfig::default()
        };
        assert!(fit_topics(&two_groups(), &one, 0).is_err());
        let untrained = TopicModel::untrained(&LdaConfig::default());
        assert!(matches!(
            topic_divergence(&untrained, &[], &[]),
            Err(Error::UntrainedModel)
        ));
    }

    #[test]
    fn uniform_mixtures_have_zero_divergence() {
        let model = fit_topics(&two_groups(), &small(5), 0).unwrap();
        assert_eq!(topic_divergence(&model, &[], &["unknown".to_string()]).unwrap(), 0.0);
        assert_eq!(jensen_shannon(&[0.25; 4], &[0.25; 4]), 0.0);
        assert_eq!(jensen_shannon(&[1.0, 0.0], &[0.0, 1.0]), 1.0);
    }

    #[test]
    fn counts_round_trip() {
        let model = fit_topics(&two_groups(), &small(10), 2).unwrap();
        let rebuilt = TopicModel::from_counts(&small(10), model.words().to_vec(), model.counts().to_vec()).unwrap();
        assert_eq!(model, rebuilt);
    }

    fn distribution(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..1.0, n).prop_map(|v| {
            let s: f64 = v.iter().sum::<f64>() + 1e-12;
            v.iter().map(|x| x / s).collect()
        })
    }

    proptest! {
        #[test]
        fn jsd_is_symmetric_and_bounded(p in distribution(5), q in distribution(5)) {
            let a = jensen_shannon(&p, &q);
            prop_assert_eq!(a, jensen_shannon(&q, &p));
            prop_assert!((0.0..=1.0).contains(&a));
        }

        #[test]
        fn divergence_bounded_for_any_text(
            a in proptest::collection::vec("[a-z]{1,8}", 0..10),
            b in proptest::collection::vec("[a-z]{1,8}", 0..10),
        ) {
            let model = fit_topics(&two_groups(), &small(5), 0).unwrap();
            let mut a = a;
            a.extend(GROUP_A.iter().take(2).map(|s| s.to_string()));
            let d = topic_divergence(&model, &a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&d));
        }
    }
}
