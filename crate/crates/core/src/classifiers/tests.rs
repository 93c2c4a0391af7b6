use super::*;
use rand::seq::SliceRandom;
use rand::Rng;

const REG: &str = "r1";

fn vectors(points: &[Vec<f64>]) -> Vec<FeatureVector> {
    points
        .iter()
        .map(|p| {
            let v = p.iter().copied().enumerate().filter(|(_, x)| *x != 0.0).collect();
            FeatureVector::new(v, REG.into())
        })
        .collect()
}

fn blobs(seed: u64, n: usize) -> (Vec<Vec<f64>>, Vec<bool>) {
    let mut rng = crate::seed::rng(seed);
    let mut pts = Vec::new();
    let mut y = Vec::new();
    for i in 0..n {
        let pos = i % 2 == 0;
        let c = if pos { 1.5 } else { -1.5 };
        pts.push(vec![c + rng.gen_range(-1.0..1.0), rng.gen_range(-2.0..2.0) * 10.0, if pos { 1.0 } else { 0.0 }]);
        y.push(pos);
    }
    (pts, y)
}

fn fit(params: &ClassifierParams, pts: &[Vec<f64>], y: &[bool]) -> TrainedModel {
    let d = pts[0].len();
    train(params, &vectors(pts), y, REG, ColumnMap::identity(d)).unwrap()
}

fn accuracy(m: &TrainedModel, pts: &[Vec<f64>], y: &[bool]) -> f64 {
    let v = vectors(pts);
    v.iter().zip(y).filter(|(x, &l)| m.predict(x).unwrap() == l).count() as f64 / y.len() as f64
}

#[test]
fn separable_pair_has_zero_hinge_loss() {
    let pts = vec![vec![2.0, 1.0], vec![-1.0, 0.5]];
    let y = [true, false];
    for standardize in [false, true] {
        let p = ClassifierParams::LinearSvm(SvmParams { c: 10.0, tolerance: 1e-9, standardize, ..SvmParams::default() });
        let m = fit(&p, &pts, &y);
        for (x, &l) in vectors(&pts).iter().zip(&y) {
            let f = m.decision_value(x).unwrap();
            assert!(if l { f } else { -f } >= 1.0 - 1e-6, "{f}");
        }
        assert_eq!(accuracy(&m, &pts, &y), 1.0);
    }
}

#[test]
fn every_kind_learns_blobs() {
    let (pts, y) = blobs(3, 120);
    for kind in ClassifierKind::ALL {
        let m = fit(&ClassifierParams::default_for(kind), &pts, &y);
        assert!(accuracy(&m, &pts, &y) >= 0.95, "{kind}");
    }
}

#[test]
fn one_nearest_neighbour_memorizes() {
    let (pts, y) = blobs(4, 60);
    let noisy: Vec<bool> = y.iter().enumerate().map(|(i, &l)| if i % 7 == 0 { !l } else { l }).collect();
    let m = fit(&ClassifierParams::Knn(KnnParams { k: 1, standardize: true }), &pts, &noisy);
    assert_eq!(accuracy(&m, &pts, &noisy), 1.0);
}

#[test]
fn boundary_point_is_positive() {
    let m = TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        params: ClassifierParams::svm(1.0),
        registry_version: REG.into(),
        columns: ColumnMap::identity(2),
        standardizer: None,
        body: ModelBody::Linear { weights: vec![1.0, -1.0], bias: 0.0 },
        calibration: None,
    };
    let x = &vectors(&[vec![3.0, 3.0]])[0];
    assert_eq!(m.decision_value(x).unwrap(), 0.0);
    assert!(m.predict(x).unwrap());
}

#[test]
fn svm_is_row_order_independent() {
    let (pts, y) = blobs(5, 80);
    let p = ClassifierParams::svm(0.5);
    let m = fit(&p, &pts, &y);
    let mut rng = crate::seed::rng(9);
    let (test, _) = blobs(6, 50);
    let tv = vectors(&test);
    for _ in 0..3 {
        let mut idx: Vec<usize> = (0..pts.len()).collect();
        idx.shuffle(&mut rng);
        let pp: Vec<Vec<f64>> = idx.iter().map(|&i| pts[i].clone()).collect();
        let yy: Vec<bool> = idx.iter().map(|&i| y[i]).collect();
        let m2 = fit(&p, &pp, &yy);
        for v in &tv {
            assert_eq!(m.predict(v).unwrap(), m2.predict(v).unwrap());
            assert_eq!(m.decision_value(v).unwrap(), m2.decision_value(v).unwrap());
        }
    }
}

#[test]
fn training_errors() {
    let v = vectors(&[vec![1.0], vec![2.0]]);
    let p = ClassifierParams::svm(1.0);
    assert!(matches!(train(&p, &v, &[true, true], REG, ColumnMap::identity(1)), Err(ClassifierError::SingleClass)));
    assert!(matches!(train(&p, &[], &[], REG, ColumnMap::identity(1)), Err(ClassifierError::Empty)));
    assert!(matches!(
        train(&ClassifierParams::svm(0.0), &v, &[true, false], REG, ColumnMap::identity(1)),
        Err(ClassifierError::InvalidParams(_))
    ));
    let m = train(&p, &v, &[true, false], REG, ColumnMap::identity(1)).unwrap();
    let other = FeatureVector::new(vec![], "r2".into());
    assert!(matches!(m.predict(&other), Err(ClassifierError::RegistryMismatch { .. })));
}

#[test]
fn column_subset_ignores_other_features() {
    let (pts, y) = blobs(7, 60);
    let m = train(&ClassifierParams::svm(0.5), &vectors(&pts), &y, REG, ColumnMap::new(vec![2], 3)).unwrap();
    assert_eq!(m.linear_weights().unwrap().len(), 1);
    assert_eq!(accuracy(&m, &pts, &y), 1.0);
}

#[test]
fn persistence_round_trip() {
    let (pts, y) = blobs(8, 40);
    let dir = tempfile::tempdir().unwrap();
    for kind in ClassifierKind::ALL {
        let mut m = fit(&ClassifierParams::default_for(kind), &pts, &y);
        m.calibrate(&vectors(&pts), &y).unwrap();
        let path = dir.path().join(format!("{kind}.json"));
        m.save(&path).unwrap();
        let back = TrainedModel::load(&path, REG).unwrap();
        assert_eq!(back, m);
        for v in vectors(&pts) {
            assert_eq!(back.decision_value(&v).unwrap(), m.decision_value(&v).unwrap());
        }
        assert!(matches!(TrainedModel::load(&path, "other"), Err(ClassifierError::RegistryMismatch { .. })));
    }
    let json = fit(&ClassifierParams::svm(1.0), &pts, &y).to_json().unwrap().replace("\"format_version\": 1", "\"format_version\": 9");
    assert!(matches!(TrainedModel::from_json(&json), Err(ClassifierError::UnsupportedVersion(9))));
}

#[test]
fn calibrated_confidence_is_monotone_and_bounded() {
    let (pts, y) = blobs(10, 200);
    let noisy: Vec<bool> = y.iter().enumerate().map(|(i, &l)| if i % 5 == 0 { !l } else { l }).collect();
    let mut m = fit(&ClassifierParams::svm(0.5), &pts, &noisy);
    assert!(matches!(m.confidence(&vectors(&pts)[0]), Err(ClassifierError::NotCalibrated)));
    m.calibrate(&vectors(&pts), &noisy).unwrap();
    let mut pairs: Vec<(f64, f64)> = vectors(&pts)
        .iter()
        .map(|v| (m.decision_value(v).unwrap(), m.confidence(v).unwrap()))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in pairs.windows(2) {
        assert!(w[0].1 <= w[1].1);
    }
    assert!(pairs.iter().all(|(_, c)| *c > 0.0 && *c < 1.0));
    assert!(matches!(m.calibrate(&vectors(&pts[..2]), &[true, true]), Err(ClassifierError::DegenerateHoldout)));
}

#[test]
fn kind_names_parse() {
    for k in ClassifierKind::ALL {
        assert_eq!(k.as_str().parse::<ClassifierKind>().unwrap(), k);
    }
    assert_eq!("svm".parse::<ClassifierKind>().unwrap(), ClassifierKind::LinearSvm);
    let p: ClassifierParams = serde_json::from_str(r#"{"kind":"linear_svm","c":2.0}"#).unwrap();
    assert_eq!(p, ClassifierParams::svm(2.0));
}
