use super::*;
use crate::synthetic;

fn small_params(seed: u64) -> WordEmbeddingParams {
    WordEmbeddingParams {
        dim: 20,
        window: 2,
        min_count: 1,
        epochs: 20,
        seed,
        ..WordEmbeddingParams::default()
    }
}

fn toks(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

#[test]
fn min_count_above_corpus_size_is_an_error() {
    let corpus = vec![TokenStream {
        tokens: toks(&["ein", "satz", "ein", "satz"]),
        source_id: "a".into(),
    }];
    let params = WordEmbeddingParams {
        min_count: 10,
        ..small_params(1)
    };
    assert!(matches!(
        train_word_embeddings(&corpus, &params),
        Err(EmbeddingError::EmptyVocabulary { min_count: 10 })
    ));
    assert!(matches!(train_word_embeddings(&[], &params), Err(EmbeddingError::EmptyCorpus)));
}

#[test]
fn self_similarity_is_one() {
    let corpus = synthetic::synonym_corpus(1, ("kaffee", "tee"), 6, 4);
    let m = train_word_embeddings(&corpus, &small_params(1)).unwrap();
    for i in 0..m.vocab().len() {
        let s = cosine_similarity(m.row(i), m.row(i)).unwrap();
        assert!((s - 1.0).abs() < 1e-6);
    }
    assert!(m.vectors().iter().all(|x| x.is_finite()));
    assert_eq!(m.loss_history.len(), 20);
}

#[test]
fn planted_synonym_is_nearest() {
    let corpus = synthetic::synonym_corpus(5, ("kaffee", "tee"), 8, 6);
    let m = train_word_embeddings(&corpus, &small_params(5)).unwrap();
    let top = m.most_similar("kaffee", 3).unwrap();
    assert_eq!(top[0].0, "tee");
    assert!(top.windows(2).all(|w| w[0].1 >= w[1].1));
}

#[test]
fn most_similar_edge_cases() {
    let corpus = synthetic::synonym_corpus(2, ("kaffee", "tee"), 2, 2);
    let m = train_word_embeddings(&corpus, &small_params(2)).unwrap();
    assert!(m.most_similar("kaffee", 0).unwrap().is_empty());
    let all = m.most_similar("kaffee", 1000).unwrap();
    assert_eq!(all.len(), m.vocab().len() - 1);
    assert!(all.iter().all(|(w, _)| w != "kaffee"));
    match m.most_similar("milch", 3) {
        Err(EmbeddingError::OutOfVocabulary(w)) => assert_eq!(w, "milch"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn cosine_cases() {
    assert!(cosine_distance(&[1.0, 2.0], &[1.0, 2.0]).unwrap().abs() < 1e-15);
    assert_eq!(cosine_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
    let d = cosine_distance(&[1.0, 0.0], &[0.5, 0.5]).unwrap();
    assert!((d - (1.0 - std::f64::consts::SQRT_2 / 2.0)).abs() < 1e-12);
    assert!((d - 0.2929).abs() < 1e-4);
    assert_eq!(cosine_similarity(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
    assert!(matches!(
        cosine_similarity(&[1.0], &[1.0, 2.0]),
        Err(EmbeddingError::DimensionMismatch { left: 1, right: 2 })
    ));
    let (u, v) = ([0.3, -1.2, 2.0], [1.5, 0.2, -0.7]);
    let s = cosine_similarity(&u, &v).unwrap();
    assert_eq!(s, cosine_similarity(&v, &u).unwrap());
    let scaled: Vec<f64> = u.iter().map(|x| x * 7.5).collect();
    assert!((s - cosine_similarity(&scaled, &v).unwrap()).abs() < 1e-12);
}

#[test]
fn single_worker_training_is_deterministic() {
    let corpus = synthetic::synonym_corpus(3, ("kaffee", "tee"), 4, 3);
    let a = train_word_embeddings(&corpus, &small_params(9)).unwrap();
    let b = train_word_embeddings(&corpus, &small_params(9)).unwrap();
    assert_eq!(a, b);
    let c = train_word_embeddings(&corpus, &small_params(10)).unwrap();
    assert_ne!(a.vectors, c.vectors);
}

#[test]
fn multi_worker_training_produces_finite_vectors() {
    let corpus = synthetic::synonym_corpus(3, ("kaffee", "tee"), 8, 6);
    let params = WordEmbeddingParams {
        workers: 4,
        ..small_params(3)
    };
    let m = train_word_embeddings(&corpus, &params).unwrap();
    assert!(m.vectors().iter().all(|x| x.is_finite()));
    assert_eq!(m.most_similar("kaffee", 1).unwrap()[0].0, "tee");
}

#[test]
fn skipgram_learns_the_synonym_too() {
    let corpus = synthetic::synonym_corpus(4, ("kaffee", "tee"), 8, 6);
    let params = WordEmbeddingParams {
        method: TrainingMethod::SkipGram,
        ..small_params(4)
    };
    let m = train_word_embeddings(&corpus, &params).unwrap();
    assert_eq!(m.most_similar("kaffee", 1).unwrap()[0].0, "tee");
}

#[test]
fn save_load_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synthetic::synonym_corpus(3, ("kaffee", "tee"), 4, 3);
    let m = train_word_embeddings(&corpus, &small_params(9)).unwrap();
    let p1 = dir.path().join("a.txt");
    let p2 = dir.path().join("b.txt");
    m.save(&p1).unwrap();
    let loaded = WordEmbeddingModel::load(&p1).unwrap();
    assert_eq!(loaded, m);
    loaded.save(&p2).unwrap();
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    let header = std::fs::read_to_string(&p1).unwrap();
    assert!(header.starts_with(&format!("{} 20\n", m.vocab().len())));

    // Retraining with the same seed writes the same bytes.
    let again = train_word_embeddings(&corpus, &small_params(9)).unwrap();
    let p3 = dir.path().join("c.txt");
    again.save(&p3).unwrap();
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p3).unwrap());
}

#[test]
fn bare_vector_file_loads_without_companions() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("v.txt");
    std::fs::write(&p, "2 3\nautor 1 0 0\nverfasser 0.9 0.1 0\n").unwrap();
    let m = WordEmbeddingModel::load(&p).unwrap();
    assert_eq!(m.dim(), 3);
    assert_eq!(m.most_similar("autor", 1).unwrap()[0].0, "verfasser");
    std::fs::write(&p, "2 3\nautor 1 0\n").unwrap();
    assert!(matches!(WordEmbeddingModel::load(&p), Err(EmbeddingError::Format { line: 2, .. })));
}

fn doc_params(seed: u64) -> WordEmbeddingParams {
    WordEmbeddingParams {
        dim: 16,
        window: 2,
        min_count: 1,
        epochs: 50,
        seed,
        ..WordEmbeddingParams::default()
    }
}

#[test]
fn doc_vectors_have_model_dimension_and_empty_docs_are_flagged() {
    let (mut corpus, _) = synthetic::topic_corpus(1, 3, 8, 10, 8);
    corpus.push(TokenStream {
        tokens: vec![],
        source_id: "leer".into(),
    });
    let dm = train_doc_embeddings(&corpus, &doc_params(1), &InferenceParams::default()).unwrap();
    assert_eq!(dm.n_docs(), corpus.len());
    for t in &corpus {
        assert_eq!(dm.trained(&t.source_id).unwrap().vector.len(), 16);
    }
    let empty = dm.trained("leer").unwrap();
    assert!(empty.flagged);
    assert!(empty.vector.iter().all(|&x| x == 0.0));
}

#[test]
fn identical_documents_are_closer_than_average() {
    let (mut corpus, _) = synthetic::topic_corpus(2, 4, 10, 15, 10);
    let twin = TokenStream {
        tokens: corpus[0].tokens.clone(),
        source_id: "twin".into(),
    };
    corpus.push(twin);
    let dm = train_doc_embeddings(&corpus, &doc_params(2), &InferenceParams::default()).unwrap();
    let v = |id: &str| dm.trained(id).unwrap().vector;
    let twin_sim = cosine_similarity(&v(&corpus[0].source_id), &v("twin")).unwrap();
    let (mut sum, mut n) = (0.0, 0);
    for i in 0..corpus.len() {
        for j in i + 1..corpus.len() {
            sum += cosine_similarity(&v(&corpus[i].source_id), &v(&corpus[j].source_id)).unwrap();
            n += 1;
        }
    }
    assert!(twin_sim > sum / n as f64, "twin {twin_sim} vs mean {}", sum / n as f64);
}

#[test]
fn inference_is_deterministic_and_leaves_words_frozen() {
    let (corpus, _) = synthetic::topic_corpus(3, 3, 8, 10, 8);
    let dm = train_doc_embeddings(&corpus, &doc_params(3), &InferenceParams::default()).unwrap();
    let before = dm.word_model.clone();
    let a = dm.infer(&corpus[4].tokens);
    let b = dm.infer(&corpus[4].tokens);
    assert_eq!(a, b);
    assert!(!a.flagged);
    assert_eq!(before.vectors, dm.word_model.vectors);
    assert_eq!(before.output, dm.word_model.output);
}

#[test]
fn inferred_vector_matches_trained_vector() {
    let (corpus, _) = synthetic::topic_corpus(4, 4, 10, 15, 12);
    let dm = train_doc_embeddings(&corpus, &doc_params(4), &InferenceParams::default()).unwrap();
    for t in corpus.iter().take(10) {
        let trained = dm.trained(&t.source_id).unwrap().vector;
        let inferred = dm.infer(&t.tokens).vector;
        let s = cosine_similarity(&trained, &inferred).unwrap();
        assert!(s > 0.5, "{}: similarity {s}", t.source_id);
    }
}

#[test]
fn all_oov_inference_is_zero_and_flagged() {
    let (corpus, _) = synthetic::topic_corpus(5, 2, 5, 5, 6);
    let dm = train_doc_embeddings(&corpus, &doc_params(5), &InferenceParams::default()).unwrap();
    let v = dm.infer(&toks(&["unbekannt", "wort"]));
    assert!(v.flagged);
    assert_eq!(v.vector, vec![0.0; 16]);
    let unseen = TokenStream {
        tokens: corpus[0].tokens.clone(),
        source_id: "neu".into(),
    };
    assert_eq!(dm.vector_for(&unseen), dm.infer(&corpus[0].tokens));
    assert_eq!(dm.vector_for(&corpus[0]), dm.trained(&corpus[0].source_id).unwrap());
}

#[test]
fn doc_model_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, _) = synthetic::topic_corpus(6, 2, 5, 5, 6);
    let dm = train_doc_embeddings(&corpus, &doc_params(6), &InferenceParams::default()).unwrap();
    dm.save(dir.path()).unwrap();
    let loaded = DocEmbeddingModel::load(dir.path()).unwrap();
    assert_eq!(loaded, dm);
}

#[test]
fn negative_sampling_gradients_match_finite_differences() {
    let dim = 5;
    let vocab = 12;
    let mut rng = seed::rng(11);
    let mut words: Vec<f64> = (0..vocab * dim).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let mut docs: Vec<f64> = (0..2 * dim).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let mut output: Vec<f64> = (0..vocab * dim).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let ex = NsExample {
        words: &[1, 4, 4, 7],
        doc: Some(1),
        target: 3,
        negatives: &[0, 5, 9, 9, 11],
    };
    let g = negative_sampling_gradients(words.as_slice(), docs.as_slice(), output.as_slice(), dim, &ex);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut check = |analytic: f64, numeric: f64| {
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(rel);
    };
    macro_rules! fd {
        ($mat:ident, $idx:expr) => {{
            let orig = $mat[$idx];
            $mat[$idx] = orig + h;
            let plus = negative_sampling_loss(words.as_slice(), docs.as_slice(), output.as_slice(), dim, &ex);
            $mat[$idx] = orig - h;
            let minus = negative_sampling_loss(words.as_slice(), docs.as_slice(), output.as_slice(), dim, &ex);
            $mat[$idx] = orig;
            (plus - minus) / (2.0 * h)
        }};
    }
    for (row, grad) in g.words.clone() {
        for k in 0..dim {
            let n = fd!(words, row * dim + k);
            check(grad[k], n);
        }
    }
    let (drow, dgrad) = g.doc.clone().unwrap();
    for k in 0..dim {
        let n = fd!(docs, drow * dim + k);
        check(dgrad[k], n);
    }
    for (row, grad) in g.output.clone() {
        for k in 0..dim {
            let n = fd!(output, row * dim + k);
            check(grad[k], n);
        }
    }
    assert!(worst < 1e-4, "max relative error {worst}");
    assert_eq!(g.words.len(), 3);
    assert_eq!(g.output.len(), 5);
}

