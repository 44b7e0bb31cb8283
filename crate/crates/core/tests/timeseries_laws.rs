use chrono::{Datelike, Duration, NaiveDate};
use ghg_nowcast::{AggregationKind, Frequency, TimeSeries};
use proptest::prelude::*;

fn base() -> NaiveDate {
    NaiveDate::from_ymd_opt(1990, 1, 1).unwrap()
}

/// Irregular series: start offset, then (gap, value) pairs.
fn sparse() -> impl Strategy<Value = TimeSeries> {
    (0i64..4000, prop::collection::vec((1i64..60, -1e4f64..1e4), 1..40)).prop_map(|(start, steps)| {
        let mut date = base() + Duration::days(start);
        let mut pts = Vec::new();
        for (gap, v) in steps {
            pts.push((date, v));
            date += Duration::days(gap);
        }
        TimeSeries::mixed(pts, Frequency::Weekly, "u").unwrap()
    })
}

fn daily_integers() -> impl Strategy<Value = TimeSeries> {
    (0i64..2000, prop::collection::vec(-5000i32..5000, 2..1200)).prop_map(|(start, vals)| {
        TimeSeries::daily_from(base() + Duration::days(start), vals.into_iter().map(f64::from).collect(), "u").unwrap()
    })
}

fn kinds() -> impl Strategy<Value = AggregationKind> {
    prop_oneof![Just(AggregationKind::Sum), Just(AggregationKind::Mean)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn to_daily_is_idempotent(s in sparse(), extra in 0i64..60) {
        let as_of = s.last_date().unwrap() + Duration::days(extra);
        let once = s.to_daily(as_of).unwrap();
        let twice = once.to_daily(as_of).unwrap();
        prop_assert_eq!(twice.points(), once.points());
    }

    #[test]
    fn to_daily_keeps_observations_and_spans_to_as_of(s in sparse(), extra in 0i64..60) {
        let as_of = s.last_date().unwrap() + Duration::days(extra);
        let d = s.to_daily(as_of).unwrap();
        prop_assert!(d.is_contiguous_daily());
        prop_assert_eq!(d.first_date(), s.first_date());
        prop_assert_eq!(d.last_date(), Some(as_of));
        for &(date, v) in s.points() {
            prop_assert_eq!(d.value_at(date), Some(v));
        }
        let last = s.points().last().unwrap().1;
        prop_assert!(d.slice(s.last_date().unwrap(), as_of).iter().all(|p| p.1 == last));
    }

    #[test]
    fn interpolation_stays_between_bracketing_observations(s in sparse()) {
        let d = s.to_daily(s.last_date().unwrap()).unwrap();
        for w in s.points().windows(2) {
            let (lo, hi) = if w[0].1 <= w[1].1 { (w[0].1, w[1].1) } else { (w[1].1, w[0].1) };
            let seg = d.slice(w[0].0, w[1].0);
            prop_assert!(seg.iter().all(|p| p.1 >= lo && p.1 <= hi));
            let rising = w[0].1 <= w[1].1;
            let monotone = seg.windows(2).all(|p| if rising { p[0].1 <= p[1].1 } else { p[0].1 >= p[1].1 });
            prop_assert!(monotone);
        }
    }

    #[test]
    fn rolling_sum_telescopes(s in daily_integers(), w in 1usize..400) {
        prop_assume!(s.len() > w);
        let r = s.rolling_window(w, AggregationKind::Sum).unwrap();
        let v = s.values();
        let rv = r.values();
        prop_assert_eq!(rv.len(), v.len() - w + 1);
        for k in 1..rv.len() {
            let d = k + w - 1;
            prop_assert_eq!(rv[k] - rv[k - 1], v[d] - v[d - w]);
        }
    }

    #[test]
    fn unit_window_is_identity(s in daily_integers()) {
        let r = s.rolling_window(1, AggregationKind::Sum).unwrap();
        prop_assert_eq!(r.points(), s.points());
    }

    #[test]
    fn annualize_matches_calendar_window(
        start in 0i64..800,
        vals in prop::collection::vec(0f64..100.0, 366..1500),
        kind in kinds(),
    ) {
        let s = TimeSeries::daily_from(base() + Duration::days(start), vals, "u").unwrap();
        if let Ok(annual) = s.annualize(kind) {
            for &(date, v) in annual.points() {
                let days = if NaiveDate::from_ymd_opt(date.year(), 2, 29).is_some() { 366 } else { 365 };
                prop_assert_eq!(s.window_value(date, days, kind), Some(v));
                prop_assert_eq!(s.rolling_window(days, kind).unwrap().value_at(date), Some(v));
            }
        }
    }

    #[test]
    fn series_rejects_unordered_dates(a in 0i64..100, b in 0i64..100) {
        let pts = vec![(base() + Duration::days(a.max(b)), 1.0), (base() + Duration::days(a.min(b)), 2.0)];
        prop_assert!(TimeSeries::mixed(pts, Frequency::Daily, "u").is_err());
    }
}

#[test]
fn frequencies_are_ordered() {
    use Frequency::*;
    assert!(Daily < Weekly && Weekly < Monthly && Monthly < Quarterly && Quarterly < Annual);
}

#[test]
fn day_of_year_sum_over_non_leap_year() {
    let vals: Vec<f64> = (1..=365).map(f64::from).collect();
    let s = TimeSeries::daily_from(NaiveDate::from_ymd_opt(2019, 1, 1).unwrap(), vals, "u").unwrap();
    assert_eq!(s.annualize(AggregationKind::Sum).unwrap().values(), vec![66_795.0]);
}

#[test]
fn non_finite_values_are_rejected() {
    let pts = vec![(base(), f64::NAN)];
    assert!(TimeSeries::new(pts, Frequency::Daily, "u").is_err());
}
