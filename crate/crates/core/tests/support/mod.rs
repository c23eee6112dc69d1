#![allow(dead_code)]

pub mod encoding;
pub mod oracles;

use chrono::NaiveDate;
use lifelens_core::model::{DayFrame, DayRecord, PersonId};
use lifelens_core::synthetic::{synthetic_day_with, SynthOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn person() -> PersonId {
    PersonId::new("p1").unwrap()
}

pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

/// A synthetic day with a seed-chosen zone, day start, date and profile.
pub fn varied_day(seed: u64) -> DayRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let zones = [
        chrono_tz::UTC,
        chrono_tz::America::New_York,
        chrono_tz::Asia::Kathmandu,
        chrono_tz::Europe::Berlin,
    ];
    let zone = zones[rng.gen_range(0..zones.len())];
    let start_hour = [0, 0, 4, 12][rng.gen_range(0..4)];
    // Includes both 2024 DST transitions for the zones that have them.
    let dates = [date(2024, 11, 18), date(2024, 3, 10), date(2024, 11, 3), date(2024, 3, 31), date(2024, 7, 1)];
    let d = dates[rng.gen_range(0..dates.len())];
    let opts = SynthOptions {
        stream_presence: 0.85,
        dropout_rate: rng.gen_range(0.0..0.01),
        plant_identifiers: rng.gen_bool(0.5),
        ..SynthOptions::default()
    };
    let mut day = synthetic_day_with(seed, &person(), d, &DayFrame::new(zone, start_hour), &opts);
    if rng.gen_bool(0.3) {
        day.profile.declared_routines.clear();
    }
    day
}
