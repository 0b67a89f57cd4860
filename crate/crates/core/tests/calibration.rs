use gpm::calib::{params, ANCHORS};
use gpm::{CalibStore, Catalog, DataDir, Error};

const HEADER: &str = "device,metric_id,params,value,unit,provenance\n";

/// Device, metric, parameters and recorded value.
type Case<'a> = (&'a str, &'a str, &'a [(&'a str, &'a str)], f64);

fn bundled() -> (DataDir, Catalog, CalibStore) {
    let data = DataDir::bundled();
    let (catalog, store) = data.load().unwrap();
    (data, catalog, store)
}

#[test]
fn dump_reproduces_the_shipped_file() {
    let (data, _, store) = bundled();
    let text = std::fs::read_to_string(data.calib_path()).unwrap();
    assert_eq!(store.dump(), text);
}

#[test]
fn every_record_has_a_known_provenance() {
    let (_, catalog, store) = bundled();
    assert!(store.unknown_provenance().is_empty());
    let names: Vec<&str> = catalog.names().collect();
    for r in store.records() {
        assert!(names.contains(&r.device.as_str()), "record for unknown device {}", r.device);
    }
    for (anchor, _) in ANCHORS {
        assert!(store.records().iter().any(|r| r.provenance == *anchor), "anchor {anchor} has no records");
    }
}

#[test]
fn fitted_parameters_are_marked_as_fitted() {
    let (_, _, store) = bundled();
    let fitted: Vec<_> = store.records().iter().filter(|r| r.metric_id.starts_with("async.params.") || r.metric_id.starts_with("te.params.")).collect();
    assert_eq!(fitted.len(), 2 * 3 * 7 + 2);
    assert!(fitted.iter().all(|r| r.provenance == "fit"));
}

/// Spot checks of transcribed measurements.
#[test]
fn transcribed_values() {
    let (_, _, store) = bundled();
    let cases: &[Case] = &[
        ("RTX4090", "mem.latency.l1", &[], 43.4),
        ("A100", "mem.latency.l1", &[], 37.9),
        ("H800", "mem.latency.l1", &[], 40.7),
        ("H800", "mem.latency.l2", &[], 263.0),
        ("H800", "mem.throughput.l2", &[("access", "FP32")], 4472.3),
        ("H800", "mem.throughput.l2", &[("access", "FP64")], 1817.3),
        ("RTX4090", "mem.throughput.l2", &[("access", "FP32v4")], 1708.0),
        ("RTX4090", "mem.throughput.global", &[], 929.8),
        ("A100", "mem.throughput.global", &[], 1407.2),
        ("H800", "mem.throughput.global", &[], 1861.5),
        ("H800", "tc.mma.throughput", &[("a", "FP16"), ("cd", "FP16"), ("shape", "m16n8k8"), ("sparse", "false")], 368.6),
        (
            "H800",
            "tc.mma.throughput",
            &[("a", "FP16"), ("cd", "FP16"), ("k_is_compressed", "true"), ("shape", "m16n8k8"), ("sparse", "true")],
            493.8,
        ),
        ("H800", "tc.mma.throughput", &[("a", "TF32"), ("cd", "FP32"), ("shape", "m16n8k4"), ("sparse", "false")], 180.6),
        ("H800", "llm.throughput", &[("dtype", "FP32"), ("model", "llama-3B")], 679.45),
        ("H800", "dsm.latency.sm2sm", &[], 180.0),
        ("H800", "dsm.rbc.peak", &[("cs", "2")], 3.27),
        ("H800", "dsm.rbc.peak", &[("cs", "4")], 2.65),
        ("H800", "dpx.max_speedup", &[("class", "SixteenBit")], 13.0),
        ("H800", "async.perf_gain", &[("block", "8")], 39.5),
        ("A100", "async.perf_gain", &[("block", "32")], 1.7),
    ];
    for (device, metric, p, want) in cases {
        assert_eq!(store.value(device, metric, &params(p)).unwrap(), *want, "{device} {metric} {p:?}");
    }
}

#[test]
fn duplicate_records_are_rejected() {
    let row = "H800,mem.latency.l1,,40.7,cycles,mem_latency\n";
    let err = CalibStore::new().ingest_str(&format!("{HEADER}{row}{row}"), "dup.csv").unwrap_err();
    assert!(matches!(err, Error::DuplicateRecord { line: 3, .. }), "{err}");
}

#[test]
fn unknown_units_are_rejected_with_their_line() {
    let err = CalibStore::new().ingest_str(&format!("{HEADER}H800,mem.latency.l1,,40.7,furlongs,mem_latency\n"), "u.csv").unwrap_err();
    assert!(matches!(err, Error::UnknownUnit { line: 2, .. }), "{err}");
}

#[test]
fn a_failed_ingest_leaves_the_store_untouched() {
    let mut store = CalibStore::new();
    store.ingest_str(&format!("{HEADER}H800,mem.latency.l1,,40.7,cycles,mem_latency\n"), "a.csv").unwrap();
    let bad = format!("{HEADER}H800,mem.latency.l2,,263,cycles,mem_latency\nH800,mem.latency.global,,oops,cycles,mem_latency\n");
    assert!(matches!(store.ingest_str(&bad, "b.csv"), Err(Error::Format { line: 3, .. })));
    assert_eq!(store.len(), 1);
}

#[test]
fn wrong_header_is_a_format_error() {
    let err = CalibStore::new().ingest_str("device,metric,value\nH800,x,1\n", "h.csv").unwrap_err();
    assert!(matches!(err, Error::Format { line: 1, .. }), "{err}");
}

#[test]
fn missing_lookup_reports_absent() {
    let (_, _, store) = bundled();
    let err = store.value("A100", "dsm.latency.sm2sm", &params(&[])).unwrap_err();
    assert!(err.is_absent());
}

#[test]
fn catalog_round_trips_through_json() {
    let (_, catalog, _) = bundled();
    let again = Catalog::from_json(&catalog.to_json(), "round-trip").unwrap();
    assert_eq!(again.devices(), catalog.devices());
    for d in catalog.devices() {
        d.validate().unwrap();
    }
}

#[test]
fn catalog_rejects_unknown_devices_and_fields() {
    let (_, catalog, _) = bundled();
    assert!(matches!(catalog.get("V100"), Err(Error::UnknownDevice(_))));
    let json = catalog.to_json().replacen("\"sm_count\"", "\"sm_count_typo\"", 1);
    assert!(Catalog::from_json(&json, "typo").is_err());
}

#[test]
fn catalog_rejects_duplicates() {
    let (_, catalog, _) = bundled();
    let mut devices = catalog.devices().to_vec();
    devices.push(devices[0].clone());
    assert!(matches!(Catalog::new(devices), Err(Error::DuplicateDevice(_))));
}
