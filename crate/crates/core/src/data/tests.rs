use super::*;

const OCCUPANCY_HEADER: &str = "date,Temperature,Humidity,Light,CO2,HumidityRatio,Occupancy\n";

fn occupancy(body: &str) -> Result<SeriesTable> {
    read_csv(format!("{OCCUPANCY_HEADER}{body}").as_bytes(), &Task::Occupancy.spec())
}

#[test]
fn three_rows() {
    let t = occupancy(
        "2015-02-04 17:51:00,23.18,27.27,426,721.25,0.00479,1\n\
         2015-02-04 17:52:00,23.15,27.2675,429.5,714,0.00478,1\n\
         2015-02-04 17:53:00,23.15,27.245,426,713.5,0.00477,0\n",
    )
    .unwrap();
    assert_eq!(t.rows(), 3);
    assert_eq!(t.k, 5);
    assert_eq!(t.row(1), &[23.15, 27.2675, 429.5, 714.0, 0.00478]);
    assert_eq!(t.targets, vec![1.0, 1.0, 0.0]);
    assert_eq!(t.period, Some(60));
}

#[test]
fn forward_fill_and_leading_drop() {
    let t = occupancy(
        "2015-02-04 17:50:00,?,27,426,700,0.004,0\n\
         2015-02-04 17:51:00,23,27,426,700,0.004,0\n\
         2015-02-04 17:52:00,24,NA,,701,0.004,1\n",
    )
    .unwrap();
    assert_eq!(t.rows(), 2);
    assert_eq!(t.row(1), &[24.0, 27.0, 426.0, 701.0, 0.004]);
}

#[test]
fn missing_column_is_named() {
    let err = read_csv(
        "date,Temperature,Humidity,Light,HumidityRatio,Occupancy\n".as_bytes(),
        &Task::Occupancy.spec(),
    )
    .unwrap_err();
    match err {
        Error::Schema { missing } => assert_eq!(missing, vec!["CO2".to_string()]),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn row_index_column_is_skipped() {
    let text = "\"date\",\"Temperature\",\"Humidity\",\"Light\",\"CO2\",\"HumidityRatio\",\"Occupancy\"\n\
                \"1\",\"2015-02-04 17:51:00\",23.18,27.272,426,721.25,0.0047929,1\n\
                \"2\",\"2015-02-04 17:51:59\",23.15,27.2675,429.5,714,0.0047834,1\n";
    let t = read_csv(text.as_bytes(), &Task::Occupancy.spec()).unwrap();
    assert_eq!(t.rows(), 2);
    assert_eq!(t.row(0)[0], 23.18);
}

#[test]
fn empty_file_is_an_error() {
    assert!(occupancy("").is_err());
}

#[test]
fn class_out_of_range_rejected() {
    assert!(occupancy("2015-02-04 17:51:00,23,27,426,700,0.004,2\n").is_err());
}

#[test]
fn hourly_aggregation() {
    let spec = Task::Power.spec();
    let text = "datetime,Global_reactive_power,Voltage,Global_intensity,Sub_metering_1,Sub_metering_2,Sub_metering_3,Global_active_power\n\
                2006-12-16 17:24:00,0.4,234,18,0,1,17,4\n\
                2006-12-16 17:25:00,0.6,236,20,0,1,16,5\n\
                2006-12-16 18:00:00,?,240,10,0,0,0,2\n";
    let t = read_csv(text.as_bytes(), &spec).unwrap();
    assert_eq!(t.rows(), 2);
    assert_eq!(t.row(0), &[0.5, 235.0, 19.0, 0.0, 1.0, 16.5]);
    assert_eq!(t.targets, vec![4.5, 2.0]);
    assert_eq!(t.row(1)[0], 0.6);
    assert_eq!(t.timestamps[1] - t.timestamps[0], 3600);
}

#[test]
fn normalizer_cases() {
    let constant = Normalizer::fit(&[3.0, 3.0, 3.0], 1);
    assert_eq!(constant.apply(&[3.0, 3.0, 3.0]), vec![0.0; 3]);

    let standard = [-1.0, 1.0, -1.0, 1.0];
    let n = Normalizer::fit(&standard, 1);
    for (a, b) in n.apply(&standard).iter().zip(standard) {
        assert!((a - b).abs() < 1e-9);
    }

    let table = synth_fixture(Task::Occupancy, 3, 500).unwrap();
    let n = Normalizer::fit_table(&table);
    for c in 0..table.k {
        let col: Vec<f64> = (0..table.rows()).map(|r| table.row(r)[c]).collect();
        let mut mean = 0.0;
        for v in &col {
            mean += v;
        }
        mean /= col.len() as f64;
        let mut var = 0.0;
        for v in &col {
            var += (v - mean).powi(2);
        }
        let std = (var / col.len() as f64).sqrt();
        assert!((n.mean[c] - mean).abs() < 1e-10);
        assert!((n.std[c] - std).abs() < 1e-10);
    }
    let z = n.apply_table(&table);
    let again = Normalizer::fit_table(&z);
    assert!(again.mean.iter().all(|m| m.abs() < 1e-9));
    assert!(again.std.iter().all(|s| (s - 1.0).abs() < 1e-6));
}

#[test]
fn window_counts() {
    assert_eq!(window_starts(100, 32, 32), vec![0, 32, 64]);
    assert_eq!(window_starts(100, 32, 1).len(), 69);
    assert!(window_starts(20, 32, 1).is_empty());
}

#[test]
fn split_fractions() {
    assert_eq!(split_points(100), (70, 85));
    let table = synth_fixture(Task::Occupancy, 0, 100).unwrap();
    let (a, b, c) = split(&table);
    assert_eq!((a.rows(), b.rows(), c.rows()), (70, 15, 15));
    assert_eq!(b.timestamps[0], table.timestamps[70]);
    assert_eq!(split(&table), (a, b, c));
}

#[test]
fn windows_partition_rows_at_full_stride() {
    let table = synth_fixture(Task::Occupancy, 1, 320).unwrap();
    let set = SequenceSet::from_table(&table, 32, 32);
    assert_eq!(set.len(), 10);
    assert_eq!(set.inputs, table.features);
    assert_eq!(set.targets, table.targets);
}

#[test]
fn no_window_crosses_a_split() {
    for task in Task::ALL {
        let spec = task.spec();
        let table = synth_fixture(task, 2, 400).unwrap();
        let ds = Dataset::prepare(&table, &spec, 32).unwrap();
        let (a, b) = split_points(table.rows());
        let count = |len: usize| window_starts(len, 32, spec.stride).len();
        assert_eq!(ds.train.len(), count(a));
        assert_eq!(ds.valid.len(), count(b - a));
        assert_eq!(ds.test.len(), count(table.rows() - b));
    }
}

#[test]
fn fixtures_are_deterministic_and_schema_conformant() {
    for task in Task::ALL {
        let spec = task.spec();
        let a = synth_fixture(task, 9, 300).unwrap();
        let b = synth_fixture(task, 9, 300).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.k, spec.input_size());
        assert_ne!(a, synth_fixture(task, 10, 300).unwrap());
        if let TargetKind::Classes(c) = spec.target_kind {
            assert!(a.targets.iter().all(|&y| y >= 0.0 && y < c as f64 && y.fract() == 0.0));
        }
    }
    let har = synth_fixture(Task::Har, 0, 2000).unwrap();
    assert_eq!(har.k, 561);
    let mut seen = [false; 6];
    for &y in &har.targets {
        seen[y as usize] = true;
    }
    assert!(seen.iter().all(|&s| s));
}

#[test]
fn fixtures_round_trip_through_csv() {
    for task in Task::ALL {
        let spec = task.spec();
        let table = synth_fixture(task, 4, 120).unwrap();
        let mut bytes = Vec::new();
        write_csv(&table, &spec, &mut bytes).unwrap();
        let back = read_csv(bytes.as_slice(), &spec).unwrap();
        assert_eq!(back, table, "{task}");
    }
}

#[test]
fn task_source_names() {
    assert_eq!("synth:occupancy".parse::<TaskSource>().unwrap(), TaskSource::Synth(Task::Occupancy));
    assert_eq!("ozone".parse::<TaskSource>().unwrap(), TaskSource::Real(Task::Ozone));
    assert!("synth:mnist".parse::<TaskSource>().is_err());
    assert_eq!(TaskSource::Synth(Task::Har).to_string(), "synth:har");
}

#[test]
fn regression_targets_are_standardized_on_train() {
    let table = synth_fixture(Task::Traffic, 0, 2000).unwrap();
    let ds = Dataset::prepare(&table, &Task::Traffic.spec(), 32).unwrap();
    let tn = ds.target_normalizer.as_ref().unwrap();
    let (a, _) = split_points(table.rows());
    let n = Normalizer::fit(&table.targets[..a], 1);
    assert_eq!(tn, &n);
}
