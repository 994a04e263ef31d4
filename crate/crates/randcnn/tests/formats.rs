use std::path::Path;

use proptest::prelude::*;

use randcnn::cache::{read_cache, write_cache, CacheRecord, FeatureCache, CACHE_MAGIC};
use randcnn::manifest::{parse_manifest_str, FoldTag};
use randcnn::model_io::SavedModel;
use randcnn::report_io::{parse_report, render_report};
use randcnn::Error;
use randcnn_core::classify::{Classifier, HyperParams, Kernel, Matrix};
use randcnn_core::eval::{EvalReport, FoldResult, ReportMeta, SplitTag};
use randcnn_core::frontends::{ArchId, Capacity};

fn cache_with(records: Vec<(String, Vec<f32>)>, dim: usize) -> FeatureCache {
    let mut c = FeatureCache::new(ArchId::Vgg, Capacity::Small, 42, dim);
    c.records = records.into_iter().map(|(clip_id, values)| CacheRecord { clip_id, values }).collect();
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cache_round_trip_is_bit_exact(
        dim in 0usize..8,
        raw in prop::collection::vec(("[a-z0-9_é]{1,12}", prop::collection::vec(any::<u32>(), 8)), 0..6),
    ) {
        let records: Vec<(String, Vec<f32>)> =
            raw.into_iter().map(|(id, bits)| (id, bits[..dim].iter().map(|&b| f32::from_bits(b)).collect())).collect();
        let c = cache_with(records, dim);
        let back = FeatureCache::from_bytes(&c.to_bytes().unwrap(), Path::new("mem")).unwrap();
        prop_assert_eq!(back.records.len(), c.records.len());
        for (a, b) in back.records.iter().zip(&c.records) {
            prop_assert_eq!(&a.clip_id, &b.clip_id);
            let abits: Vec<u32> = a.values.iter().map(|v| v.to_bits()).collect();
            let bbits: Vec<u32> = b.values.iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(abits, bbits);
        }
        prop_assert_eq!((back.arch, back.capacity, back.seed, back.dim), (c.arch, c.capacity, c.seed, c.dim));
    }
}

#[test]
fn cache_file_round_trip_and_layout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.rwcf");
    let c = cache_with(vec![("a".into(), vec![1.0, -0.5]), ("bb".into(), vec![f32::MIN_POSITIVE, 3.25])], 2);
    write_cache(&path, &c).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..4], CACHE_MAGIC);
    assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
    assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), ArchId::Vgg.code());
    assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 42);
    assert_eq!(u32::from_le_bytes(bytes[28..32].try_into().unwrap()), 2);
    // header 32 bytes, then 2 + 1 + 8 and 2 + 2 + 8
    assert_eq!(bytes.len(), 32 + 11 + 12);
    assert_eq!(read_cache(&path).unwrap(), c);
}

#[test]
fn truncated_cache_is_corrupt() {
    let c = cache_with(vec![("x".into(), vec![1.0, 2.0, 3.0])], 3);
    let bytes = c.to_bytes().unwrap();
    for cut in [4, 1, bytes.len() - 20] {
        let err = FeatureCache::from_bytes(&bytes[..bytes.len() - cut], Path::new("t")).unwrap_err();
        assert!(matches!(err, Error::Corrupt { .. }), "{err}");
    }
    let mut extra = bytes.clone();
    extra.push(0);
    assert!(matches!(FeatureCache::from_bytes(&extra, Path::new("t")), Err(Error::Corrupt { .. })));
}

#[test]
fn bad_magic_and_version_are_corrupt() {
    let bytes = cache_with(vec![], 4).to_bytes().unwrap();
    let mut m = bytes.clone();
    m[0] = b'X';
    assert!(matches!(FeatureCache::from_bytes(&m, Path::new("t")), Err(Error::Corrupt { .. })));
    let mut v = bytes;
    v[4] = 2;
    assert!(matches!(FeatureCache::from_bytes(&v, Path::new("t")), Err(Error::Corrupt { .. })));
}

#[test]
fn empty_cache_is_valid() {
    let c = cache_with(vec![], 120);
    let bytes = c.to_bytes().unwrap();
    assert_eq!(bytes.len(), 32);
    let back = FeatureCache::from_bytes(&bytes, Path::new("e")).unwrap();
    assert!(back.records.is_empty());
    assert_eq!(back.dim, 120);
}

#[test]
fn inconsistent_record_length_is_rejected() {
    let c = cache_with(vec![("a".into(), vec![1.0])], 2);
    assert!(c.to_bytes().is_err());
}

fn manifest(text: &str) -> Result<randcnn::manifest::DatasetManifest, Error> {
    parse_manifest_str(text, Path::new("m.csv"), Path::new("/data"), "m".into())
}

#[test]
fn three_row_manifest() {
    let m = manifest("clip_id,path,label,fold\na,a.wav,rock,1\nb,/abs/b.wav,jazz,2\nc,sub/c.wav,rock,1\n").unwrap();
    assert_eq!(m.len(), 3);
    assert_eq!(m.rows[0].path, Path::new("/data/a.wav"));
    assert_eq!(m.rows[1].path, Path::new("/abs/b.wav"));
    assert_eq!(m.class_names(), ["jazz", "rock"]);
    assert_eq!(m.label_indices(), [1, 0, 1]);
    assert_eq!(m.rows[2].fold, FoldTag::Fold(1));
    let plan = m.fold_plan(10, 0).unwrap();
    assert_eq!(plan.k, 2);
}

#[test]
fn columns_may_come_in_any_order() {
    let m = manifest("label,fold,clip_id,path\nrock,,a,a.wav\n").unwrap();
    assert_eq!(m.rows[0].clip_id, "a");
    assert_eq!(m.rows[0].fold, FoldTag::Unassigned);
}

#[test]
fn duplicate_clip_id_names_id_and_line() {
    let err = manifest("clip_id,path,label,fold\na,a.wav,x,1\nb,b.wav,x,1\na,c.wav,y,2\n").unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err, Error::Parse { line: 4, .. }), "{msg}");
    assert!(msg.contains("'a'") && msg.contains("line 2"), "{msg}");
}

#[test]
fn missing_column_is_a_parse_error() {
    let err = manifest("clip_id,path,label\na,a.wav,x\n").unwrap_err();
    assert!(matches!(err, Error::Parse { line: 1, .. }));
    assert!(err.to_string().contains("fold"));
}

#[test]
fn mixed_fold_vocabularies_are_rejected() {
    let err = manifest("clip_id,path,label,fold\na,a.wav,x,1\nb,b.wav,x,train\n").unwrap_err();
    assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    assert!(manifest("clip_id,path,label,fold\na,a.wav,x,\nb,b.wav,x,3\n").is_err());
    assert!(manifest("clip_id,path,label,fold\na,a.wav,x,eval\n").is_err());
}

#[test]
fn empty_label_is_rejected() {
    assert!(matches!(manifest("clip_id,path,label,fold\na,a.wav,,1\n"), Err(Error::Parse { line: 2, .. })));
}

#[test]
fn split_manifest_reports_sizes() {
    let mut text = String::from("clip_id,path,label,fold\n");
    for (tag, n) in [("train", 443), ("valid", 197), ("test", 290)] {
        for i in 0..n {
            text.push_str(&format!("{tag}{i},{tag}{i}.wav,genre{},{tag}\n", i % 10));
        }
    }
    let m = manifest(&text).unwrap();
    assert_eq!(m.split_sizes(), Some((443, 197, 290)));
    let plan = m.fold_plan(10, 0).unwrap();
    assert!(plan.is_fixed());
    assert_eq!(plan.rounds(), 1);
    let (train, test) = plan.round(0);
    assert_eq!((train.len(), test.len()), (443, 290));
    assert_eq!(m.rows[500].fold, FoldTag::Split(SplitTag::Valid));
}

#[test]
fn manifest_csv_round_trip() {
    let m = manifest("clip_id,path,label,fold\na,/x/a.wav,\"rock, loud\",valid\n").unwrap();
    let back = manifest(&m.to_csv()).unwrap();
    assert_eq!(back, m);
}

fn two_class_data() -> (Matrix, Vec<usize>) {
    let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![(i % 2) as f64 * 3.0 + 0.1 * i as f64, (i / 2) as f64]).collect();
    (Matrix::from_rows(&rows).unwrap(), (0..12).map(|i| i % 2).collect())
}

fn assert_model_round_trip(params: HyperParams) {
    let (x, y) = two_class_data();
    let classifier = Classifier::fit(params, &x, &y, 3, 7).unwrap();
    let saved = SavedModel { classifier, class_names: vec!["a".into(), "b".into(), "c".into()] };
    let bytes = saved.to_bytes();
    let back = SavedModel::from_bytes(&bytes, Path::new("m")).unwrap();
    assert_eq!(back.class_names, saved.class_names);
    assert_eq!(back.classifier.predict(&x).unwrap(), saved.classifier.predict(&x).unwrap());
    assert_eq!(back.to_bytes(), bytes, "f32 payloads survive a second round trip");
    assert!(SavedModel::from_bytes(&bytes[..bytes.len() - 1], Path::new("m")).is_err());
}

#[test]
fn svm_model_round_trip() {
    assert_model_round_trip(HyperParams::Svm { kernel: Kernel::Linear, c: 2.0 });
    assert_model_round_trip(HyperParams::Svm { kernel: Kernel::Rbf { gamma: 0.5 }, c: 8.0 });
}

#[test]
fn elm_model_round_trip() {
    assert_model_round_trip(HyperParams::Elm { hidden: 20 });
}

#[test]
fn report_round_trip() {
    let best = HyperParams::Elm { hidden: 100 };
    let folds = (0..2)
        .flat_map(|run| {
            (0..3).map(move |fold| FoldResult {
                run,
                fold,
                accuracy: 0.25 * (run + fold) as f64,
                best,
                train_size: 8,
                test_size: 2,
                standardizer_checksum: 0,
            })
        })
        .collect();
    let meta = ReportMeta { arch: "vgg".into(), capacity: "s".into(), classifier: "elm".into(), seed: 3 };
    let r = EvalReport::from_results(folds, meta).unwrap();
    let text = render_report(&r, &[best], &[("dataset", "toy".into())]);
    let p = parse_report(&text, Path::new("r")).unwrap();
    assert_eq!(p.values["arch"], "vgg");
    assert_eq!(p.values["dataset"], "toy");
    assert_eq!(p.values["grid_points"], "1");
    assert_eq!(p.folds.len(), 6);
    assert_eq!(p.run_means(), r.run_means());
    assert!(parse_report("nonsense", Path::new("r")).is_err());
}
