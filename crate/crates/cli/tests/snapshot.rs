use caom_cli::snapshot::{FIELDS, MAGIC, VERSION};
use caom_cli::{read_snapshot, write_snapshot, SnapshotError};
use caom_core::grid::{Field1D, Grid2D};
use caom_core::model::{to_u, CoupledState, TransformedState};
use proptest::prelude::*;

fn state(ny: usize, nz: usize, seed: u64) -> CoupledState {
    let v = TransformedState::random_smooth(Grid2D::new(ny, nz).unwrap(), seed, 3).unwrap();
    to_u(&v, &Field1D::from_fn(ny, |y| 0.1 * y - 0.05))
}

fn bytes(u: &CoupledState) -> Vec<u8> {
    let mut b = Vec::new();
    write_snapshot(&mut b, u).unwrap();
    b
}

fn bits(u: &CoupledState) -> Vec<u64> {
    let mut out = vec![u.time.to_bits()];
    out.extend(u.theta.values.iter().map(|x| x.to_bits()));
    for f in [&u.q, &u.t_ocean, &u.s_ocean, &u.psi] {
        out.extend(f.values.iter().map(|x| x.to_bits()));
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip_is_bit_exact(ny in 4usize..24, nz in 4usize..24, seed in any::<u64>(), time in -1e6f64..1e6, scale in prop::num::f64::NORMAL) {
        let mut u = state(ny, nz, seed);
        u.time = time;
        u.q.values.mapv_inplace(|x| x * scale);
        let back = read_snapshot(&mut bytes(&u).as_slice()).unwrap();
        prop_assert_eq!(bits(&back), bits(&u));
    }
}

#[test]
fn layout_matches_the_documented_header() {
    let u = state(6, 4, 1);
    let b = bytes(&u);
    let (my, mz) = (7usize, 5usize);
    assert_eq!(&b[..4], MAGIC);
    assert_eq!(u32::from_le_bytes(b[4..8].try_into().unwrap()), VERSION);
    assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), 6);
    assert_eq!(u32::from_le_bytes(b[12..16].try_into().unwrap()), 4);
    assert_eq!(f64::from_le_bytes(b[16..24].try_into().unwrap()), u.time);
    assert_eq!(u32::from_le_bytes(b[24..28].try_into().unwrap()), 5);
    assert_eq!(&b[28..33], b"theta");
    assert!(b[33..44].iter().all(|c| *c == 0));
    assert_eq!(b.len(), 28 + 16 * FIELDS.len() + 8 * (my + 4 * my * mz));
    // y varies fastest within a plane
    let q0 = 28 + 16 + 8 * my + 16;
    let at = |k: usize| f64::from_le_bytes(b[q0 + 8 * k..q0 + 8 * k + 8].try_into().unwrap());
    assert_eq!(at(1), u.q.values[[1, 0]]);
    assert_eq!(at(my), u.q.values[[0, 1]]);
}

#[test]
fn header_is_validated() {
    let good = bytes(&state(5, 5, 2));
    let mut b = good.clone();
    b[0] = b'X';
    assert!(matches!(read_snapshot(&mut b.as_slice()), Err(SnapshotError::Magic)));
    let mut b = good.clone();
    b[4..8].copy_from_slice(&2u32.to_le_bytes());
    assert!(matches!(read_snapshot(&mut b.as_slice()), Err(SnapshotError::Version(2))));
    let mut b = good.clone();
    b[8..12].copy_from_slice(&2u32.to_le_bytes());
    assert!(matches!(read_snapshot(&mut b.as_slice()), Err(SnapshotError::Dims(2, 5))));
    let mut b = good.clone();
    b[12..16].copy_from_slice(&u32::MAX.to_le_bytes());
    assert!(matches!(read_snapshot(&mut b.as_slice()), Err(SnapshotError::Dims(5, _))));
    let mut b = good.clone();
    b[24..28].copy_from_slice(&4u32.to_le_bytes());
    assert!(matches!(read_snapshot(&mut b.as_slice()), Err(SnapshotError::FieldCount(4))));
    let mut b = good.clone();
    b[28] = b'T';
    match read_snapshot(&mut b.as_slice()) {
        Err(SnapshotError::Tag { expected, found }) => {
            assert_eq!(expected, "theta");
            assert_eq!(found, "Theta");
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(read_snapshot(&mut &good[..good.len() - 1]), Err(SnapshotError::Io(_))));
}
