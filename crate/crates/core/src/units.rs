//! Physical constants and unit conversions shared by every module.

/// Propagation speed used throughout the models (m/s).
///
/// The rounded value is kept so that range resolution comes out at exactly
/// 2.5 mm for 60 GHz of bandwidth.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Standard noise reference temperature (K).
pub const T0_KELVIN: f64 = 290.0;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    linear_to_db(w) + 30.0
}

pub fn wavelength(freq_hz: f64) -> f64 {
    SPEED_OF_LIGHT / freq_hz
}

/// Power-of-two test used by the binary-tree LO formulas.
pub fn is_power_of_two(n: usize) -> bool {
    n != 0 && n & (n - 1) == 0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_points() {
        assert_eq!(db_to_linear(0.0), 1.0);
        assert!((db_to_linear(10.0) - 10.0).abs() < 1e-12);
        assert!((watts_to_dbm(1e-3)).abs() < 1e-12);
        assert!((dbm_to_watts(10.0) - 0.01).abs() < 1e-15);
        assert!((wavelength(140e9) - 2.142_857_142_857e-3).abs() < 1e-12);
    }

    #[test]
    fn powers_of_two() {
        assert!(is_power_of_two(1));
        assert!(is_power_of_two(1024));
        assert!(!is_power_of_two(0));
        assert!(!is_power_of_two(6));
    }

    proptest! {
        #[test]
        fn db_round_trip(db in -200.0f64..200.0) {
            let back = linear_to_db(db_to_linear(db));
            prop_assert!((back - db).abs() <= 1e-12 * db.abs().max(1.0));
            let lin = db_to_linear(db);
            let again = db_to_linear(linear_to_db(lin));
            prop_assert!(((again - lin) / lin).abs() <= 1e-12);
        }
    }
}
