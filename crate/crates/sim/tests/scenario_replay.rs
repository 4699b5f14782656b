use crossknit_core::network::scan_frame_static;
use crossknit_core::pipeline::{Pipeline, PipelineParams};
use crossknit_core::pressure::field_to_resistance;
use crossknit_core::{ContactPatch, SensorConfig};
use crossknit_sim::engine::{dump_frame_voltages, run_scenario, EngineOptions, Sampling};
use crossknit_sim::live::quick_calibration;
use crossknit_sim::scenario::{Keyframe, Scenario};
use crossknit_sim::wire::{read_frames, write_frames};
use std::collections::BTreeSet;
use std::path::Path;

fn scenario_file(name: &str) -> Scenario {
    Scenario::load(Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)).unwrap()
}

fn wire_bytes(scenario: &Scenario, options: EngineOptions) -> Vec<u8> {
    let config = scenario.config().unwrap();
    let frames = run_scenario(scenario, &config, options).unwrap();
    let mut out = Vec::new();
    write_frames(&frames, &mut out).unwrap();
    out
}

#[test]
fn same_seed_gives_identical_bytes() {
    let s = scenario_file("traverse_4x4.json");
    let config = s.config().unwrap();
    let mut options = EngineOptions::for_config(&config);
    options.noise_codes = 4;
    options.seed = 11;
    let a = wire_bytes(&s, options);
    assert_eq!(a, wire_bytes(&s, options));
    options.seed = 12;
    assert_ne!(a, wire_bytes(&s, options));
    options.noise_codes = 0;
    assert_eq!(wire_bytes(&s, options), wire_bytes(&s, EngineOptions::for_config(&config)));
}

#[test]
fn wire_file_roundtrips_scanned_frames() {
    let s = scenario_file("l_pattern_4x4.json");
    let config = s.config().unwrap();
    let frames = run_scenario(&s, &config, EngineOptions::for_config(&config)).unwrap();
    let mut bytes = Vec::new();
    write_frames(&frames, &mut bytes).unwrap();
    let back = read_frames(bytes.as_slice()).unwrap();
    assert_eq!(back.len(), frames.len());
    for (a, b) in frames.iter().zip(&back) {
        assert_eq!(a.counts, b.counts);
        assert_eq!(a.t_start_us.round(), b.t_start_us);
    }
}

#[test]
fn rolling_shutter_reads_each_taxel_at_its_own_instant() {
    let config = SensorConfig::preset("4x4").unwrap();
    let options = EngineOptions::for_config(&config);
    // The press lands while taxel 6 of the first frame is being read.
    let t_on = options.timing.sample_offset_us(6) - 1.0;
    let (x, y) = config.taxel_center(1, 1);
    let press = ContactPatch::disk("p", x, y, 30.0, 40.0);
    let s = Scenario::from_presses("4x4", 2.0 * 6835.2, &[(t_on, 1e9, press)]);
    let frames = run_scenario(&s, &config, options).unwrap();
    let times = frames[0].per_taxel_time_us.as_ref().unwrap();

    for (i, frame) in frames.iter().enumerate() {
        for row in 0..4 {
            for col in 0..4 {
                let t = frame.per_taxel_time_us.as_ref().unwrap()[(row, col)];
                let m = field_to_resistance(&s.field_at(t), &config, &options.transfer, None);
                let whole = scan_frame_static(&config, &m).unwrap();
                assert_eq!(frame.reading(row, col), whole.reading(row, col), "frame {i} taxel ({row},{col})");
            }
        }
    }
    // Before the press everything is dark; from the press on, the patch
    // under (1,1) reads.
    assert!((0..6).all(|k| frames[0].counts.as_slice()[k] == 0));
    assert!(times.as_slice()[6] > t_on && frames[0].counts.as_slice()[6] > 0);

    let mut snap = options;
    snap.sampling = Sampling::Snapshot;
    let frames = run_scenario(&s, &config, snap).unwrap();
    assert!(frames[0].counts.as_slice().iter().all(|&c| c == 0));
    assert!(frames[0].per_taxel_time_us.is_none());
    let m = field_to_resistance(&s.field_at(6835.2), &config, &options.transfer, None);
    assert_eq!(frames[1].counts, scan_frame_static(&config, &m).unwrap().counts);
}

#[test]
fn traverse_alternates_single_and_paired_activation() {
    let s = scenario_file("traverse_4x4.json");
    let config = s.config().unwrap();
    let options = EngineOptions::for_config(&config);
    let frames = run_scenario(&s, &config, options).unwrap();
    let pipeline = Pipeline::new(
        config.clone(),
        PipelineParams::default(),
        Some(quick_calibration(&config, &options.transfer).unwrap()),
    );
    let pitch = config.taxel_pitch_mm;
    let mut sets: Vec<BTreeSet<(usize, usize)>> = Vec::new();
    let mut last_x = f64::NEG_INFINITY;
    for (k, key) in s.keyframes.iter().enumerate().filter(|(_, k)| !k.patches.is_empty()) {
        // Every position is held for two frames; the second one is read.
        let analysis = pipeline.process(&frames[2 * k + 1]).unwrap();
        assert_eq!(analysis.events.len(), 1, "step {k}");
        let e = &analysis.events[0];
        let truth = key.patches[0].center_mm;
        assert!((e.centroid_mm[0] - truth[0]).abs() <= pitch / 2.0, "step {k}: {:?} vs {truth:?}", e.centroid_mm);
        assert!(e.centroid_mm[0] >= last_x - 1e-9, "centroid moved backwards at step {k}");
        last_x = e.centroid_mm[0];
        let set: BTreeSet<_> = e.taxels.iter().copied().collect();
        assert!(matches!(set.len(), 1 | 2), "step {k}: {set:?}");
        if sets.last() != Some(&set) {
            sets.push(set);
        }
    }
    let sizes: Vec<usize> = sets.iter().map(|s| s.len()).collect();
    assert_eq!(sizes, vec![1, 2, 1, 2, 1, 2, 1]);
}

#[test]
fn voltage_dump_covers_every_selection() {
    let s = scenario_file("l_pattern_4x4.json");
    let config = s.config().unwrap();
    let mut out = Vec::new();
    dump_frame_voltages(&s, &config, &EngineOptions::for_config(&config), 3, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("sel_row,sel_col,node,label,volts"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    let selections: BTreeSet<(&str, &str)> = rows.iter().map(|r| (r[0], r[1])).collect();
    assert_eq!(selections.len(), 16);
    // The driven column connector sits at the supply.
    let drive = rows.iter().find(|r| r[0] == "0" && r[1] == "1" && r[3] == "c1").unwrap();
    assert_eq!(drive[4].parse::<f64>().unwrap(), config.vcc_volts);
}

#[test]
fn keyframe_times_must_increase() {
    let mut s = scenario_file("traverse_4x4.json");
    s.keyframes.swap(1, 2);
    assert!(s.validate().is_err());
    s.keyframes = vec![Keyframe {
        t_us: -1.0,
        patches: vec![],
    }];
    assert!(s.validate().is_err());
}
