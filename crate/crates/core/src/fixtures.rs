//! Worked models used across the unit-test suites.

use crate::model::ArmModel;

/// Two-state non-communicating model: both actions keep the arm in place,
/// the passive action pays in state 0 and the active action pays in state 1.
pub(crate) fn identity_model() -> ArmModel {
    ArmModel::new(
        vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        vec![1.0, 0.0],
        vec![0.0, 1.0],
        0.5,
    )
    .unwrap()
}

/// Four-state communicating, aperiodic multichain example with optimal
/// stationary point `x* = (1/4, 1/4, 1/4, 1/4)`, `u* = (1/4, 1/4, 0, 0)` and
/// value 1 from `x_init = (0.4, 0, 0.6, 0)`.
pub(crate) fn four_state_model() -> ArmModel {
    ArmModel::new(
        vec![
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.9, 0.0, 0.1, 0.0],
            vec![0.0, 0.0, 0.9, 0.1],
            vec![0.0, 0.0, 0.1, 0.9],
        ],
        vec![
            vec![0.9, 0.1, 0.0, 0.0],
            vec![0.1, 0.9, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.1, 0.0, 0.9, 0.0],
        ],
        vec![0.0, 0.0, 1.0, 1.0],
        vec![1.0, 1.0, 0.0, 0.0],
        0.5,
    )
    .unwrap()
}
