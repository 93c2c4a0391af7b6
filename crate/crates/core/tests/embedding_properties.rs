use chrono::NaiveDate;
use metacom::corpus::{Addressee, Comment, LabelSet, LabeledDataset};
use metacom::embeddings::{cosine_similarity, train_doc_embeddings, train_word_embeddings, InferenceParams, WordEmbeddingParams};
use metacom::features::{enrich_keywords, KeywordSet};
use metacom::sampling::sample_by_similarity;
use metacom::synthetic::{synonym_corpus, topic_corpus};
use metacom::textprep::{Preprocessor, StopWords};

fn params(seed: u64) -> WordEmbeddingParams {
    WordEmbeddingParams { dim: 20, window: 2, min_count: 1, epochs: 20, seed, ..WordEmbeddingParams::default() }
}

#[test]
fn shared_context_pair_is_the_most_similar_pair() {
    let mut wins = 0;
    for seed in 0..100 {
        let m = train_word_embeddings(&synonym_corpus(seed, ("kaffee", "tee"), 8, 6), &params(seed)).unwrap();
        let target = cosine_similarity(m.vector("kaffee").unwrap(), m.vector("tee").unwrap()).unwrap();
        let n = m.vocab().len();
        let mut best_other = f64::NEG_INFINITY;
        for i in 0..n {
            for j in i + 1..n {
                let pair = (m.vocab().token(i), m.vocab().token(j));
                if pair == ("kaffee", "tee") || pair == ("tee", "kaffee") {
                    continue;
                }
                best_other = best_other.max(cosine_similarity(m.row(i), m.row(j)).unwrap());
            }
        }
        wins += usize::from(target > best_other);
    }
    assert!(wins >= 95, "pair was most similar for {wins}/100 seeds");
}

#[test]
fn enrichment_picks_up_the_planted_synonym() {
    let m = train_word_embeddings(&synonym_corpus(4, ("autor", "verfasser"), 8, 6), &params(4)).unwrap();
    let ks = enrich_keywords(Addressee::Journalist, &["autor".to_string(), "schreiberling".to_string()], &m, 3, 0.0);
    assert_eq!(ks.enriched[..2], ["autor".to_string(), "schreiberling".to_string()]);
    assert_eq!(ks.enriched[2], "verfasser");
    assert_eq!(ks.no_embedding, vec!["schreiberling".to_string()]);
    let none = enrich_keywords(Addressee::Journalist, &["autor".to_string()], &m, 0, 0.0);
    assert_eq!(none.enriched, none.seeds);
}

fn topic_dataset(seed: u64) -> (LabeledDataset, Vec<usize>) {
    let (docs, topics) = topic_corpus(seed, 3, 8, 30, 12);
    let ts = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
    let mut ds = LabeledDataset::new("topics");
    for d in &docs {
        ds.push(Comment::new(d.source_id.clone(), "", d.tokens.join(" "), ts), LabelSet::empty()).unwrap();
    }
    (ds, topics)
}

#[test]
fn similarity_sampling_ranks_the_cluster_first() {
    let pre = Preprocessor::new(StopWords::none());
    let mut wins = 0;
    for seed in 0..100 {
        let (ds, topics) = topic_dataset(seed);
        let streams: Vec<_> = ds.comments().map(|c| pre.preprocess(c, true)).collect();
        let p = WordEmbeddingParams { epochs: 60, ..params(seed) };
        let dm = train_doc_embeddings(&streams, &p, &InferenceParams::default()).unwrap();
        let ks = KeywordSet::new(Addressee::Media, (0..8).map(|w| format!("t0w{w}")).collect());
        let batch = sample_by_similarity(&ds, &ks, &dm.word_model, &dm, &pre, ds.len()).unwrap();
        let cluster = topics.iter().filter(|&&t| t == 0).count();
        let on_topic = |id: &str| topics[ds.comments().position(|c| c.id == id).unwrap()] == 0;
        wins += usize::from(batch.items[..cluster].iter().all(|i| on_topic(&i.comment.id)));
    }
    assert!(wins >= 95, "cluster ranked first for {wins}/100 seeds");
}
