use lmrk_core::wire::{decode_trajectory, encode_trajectory};
use lmrk_core::{
    deserialize_packet, serialize_packet, Action, Layer, PolicyPacket, PolicyParams, Step,
    Trajectory, Version,
};
use proptest::prelude::*;

fn layer() -> impl Strategy<Value = Layer> {
    (1u32..=64, 1u32..=64).prop_flat_map(|(rows, cols)| {
        let n = (rows * cols) as usize;
        (
            prop::collection::vec(-1e6f32..1e6, n),
            prop::collection::vec(-1e6f32..1e6, cols as usize),
        )
            .prop_map(move |(weights, bias)| Layer {
                rows,
                cols,
                weights,
                bias,
            })
    })
}

fn packet() -> impl Strategy<Value = PolicyPacket> {
    (any::<u64>(), prop::collection::vec(layer(), 0..=4), 0.0f64..1e6).prop_map(
        |(v, layers, t)| PolicyPacket::new(Version(v), PolicyParams::new(layers).unwrap()).at(t),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn packet_round_trip(p in packet()) {
        let bytes = serialize_packet(&p);
        let q = deserialize_packet(&bytes).unwrap();
        prop_assert!(q.same_content(&p));
        // bit-exact: re-encoding reproduces the same bytes
        prop_assert_eq!(serialize_packet(&q), bytes);
    }

    #[test]
    fn trajectory_round_trip(
        states in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 3), 1..20),
        terminal in any::<bool>(),
    ) {
        let n = states.len();
        let steps = states
            .into_iter()
            .enumerate()
            .map(|(i, state)| Step {
                action: if i % 2 == 0 { Action::Discrete(i) } else { Action::Continuous(vec![i as f64]) },
                log_prob: -(i as f64),
                value: i as f64 * 0.5,
                reward: vec![1.0, -1.0],
                done: terminal && i + 1 == n,
                state,
            })
            .collect();
        let t = Trajectory::new(4, Version(11), steps).unwrap();
        prop_assert_eq!(decode_trajectory(&encode_trajectory(&t)).unwrap(), t);
    }
}
