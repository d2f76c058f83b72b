use mortcast_core::evaluation::{
    aggregate_states_excluding_failed, aggregate_states_to_national, build_schedule, evaluate_model, forecast_region,
    forecaster, render_report, ModelSettings, ReportFormat,
};
use mortcast_core::synthetic::synthetic_covid;
use mortcast_core::{EvaluationReport, Level, ModelKind, Region};

fn states() -> Vec<Region> {
    ["CA", "NY", "TX"].iter().map(|c| Region::parse(c).unwrap()).collect()
}

#[test]
fn national_report_has_every_model() {
    let data = synthetic_covid(&states(), 21).unwrap();
    let ds = &data.national;
    let full = build_schedule(ds.len(), Level::National.initial_train(), 14, 14).unwrap();
    assert_eq!(full.windows.len(), 10);
    // The last three windows keep the test fast.
    let schedule = build_schedule(ds.len(), full.windows[7].train_end, 14, 14).unwrap();
    assert_eq!(schedule.windows.len(), 3);
    let settings = ModelSettings::default();
    let mut report = EvaluationReport::new(14);
    for kind in ModelKind::ALL {
        let scores = evaluate_model(kind, &settings, ds, &Region::national(), &schedule).unwrap();
        println!("{kind}: average {:.2}, excluded {}", scores.average(), scores.excluded);
        assert!(scores.excluded < scores.windows, "{kind} failed every window");
        assert!(
            scores.smape.iter().all(|v| v.is_finite() && (0.0..=200.0).contains(v)),
            "{kind}"
        );
        report.push(kind.label(), scores).unwrap();
    }
    let csv = render_report(&report, ReportFormat::Csv);
    assert!(csv.starts_with("horizon,RW,SARIMAX,SARIMA,MCP,VAR\n"));
    assert_eq!(csv.lines().count(), 16);
}

#[test]
fn state_forecasts_aggregate_to_national() {
    let data = synthetic_covid(&states(), 5).unwrap();
    let schedule = build_schedule(data.states.len(), Level::State.initial_train(), 14, 14).unwrap();
    let national = data.national.target(&Region::national()).unwrap();
    let model = forecaster(ModelKind::Rw, &ModelSettings::default());
    let per_state: Vec<_> = states()
        .iter()
        .map(|r| forecast_region(model.as_ref(), &data.states, r, &schedule, true).unwrap())
        .collect();
    let strict = aggregate_states_to_national(&per_state, &national).unwrap();
    let lenient = aggregate_states_excluding_failed(&per_state, &national).unwrap();
    assert_eq!(strict, lenient);
    // The synthetic national series is the sum of its states, so the summed
    // RW forecast equals the national RW forecast.
    let nat_ds = data.national.slice(
        (Level::State.start_date() - Level::National.start_date()).num_days() as usize,
        data.national.len(),
    );
    let nat_ds = nat_ds.unwrap();
    let direct = evaluate_model(
        ModelKind::Rw,
        &ModelSettings::default(),
        &nat_ds,
        &Region::national(),
        &schedule,
    )
    .unwrap();
    for (a, b) in strict.smape.iter().zip(&direct.smape) {
        assert!((a - b).abs() < 1e-9);
    }
}
