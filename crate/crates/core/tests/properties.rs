use std::collections::BTreeMap;

use cfakit::cfa::{make_embedding, CfaKind, ColorChannel};
use cfakit::demosaic::{make_dead_mask, DeadPixelMask};
use cfakit::io::{mask_from_bytes, mask_to_bytes, TensorData, TensorFile};
use cfakit::mosaic::{bin, pack, sample_mosaic, shuffle_remosaic, unpack, Mosaic};
use cfakit::RgbImage;
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = CfaKind> {
    prop_oneof![Just(CfaKind::Single), Just(CfaKind::Quad), Just(CfaKind::Nona)]
}

fn multi_block_kind() -> impl Strategy<Value = CfaKind> {
    prop_oneof![Just(CfaKind::Quad), Just(CfaKind::Nona)]
}

/// A mosaic of `kind` with 1..=3 tiles per axis and arbitrary values.
fn mosaic_of(kind: CfaKind) -> impl Strategy<Value = Mosaic> {
    let p = kind.period();
    (1..=3usize, 1..=3usize).prop_flat_map(move |(th, tw)| {
        prop::collection::vec(0.0..=1.0f64, th * p * tw * p)
            .prop_map(move |data| Mosaic::new(kind.layout(), th * p, tw * p, data).unwrap())
    })
}

fn any_mosaic() -> impl Strategy<Value = Mosaic> {
    kind().prop_flat_map(mosaic_of)
}

fn tile_multisets(m: &Mosaic, p: usize) -> Vec<BTreeMap<u64, usize>> {
    let mut out = Vec::new();
    for tr in (0..m.height()).step_by(p) {
        for tc in (0..m.width()).step_by(p) {
            let mut set = BTreeMap::new();
            for r in tr..tr + p {
                for c in tc..tc + p {
                    *set.entry(m.get(r, c).to_bits()).or_insert(0) += 1;
                }
            }
            out.push(set);
        }
    }
    out
}

proptest! {
    #[test]
    fn pack_then_unpack_is_identity(m in any_mosaic()) {
        let back = unpack(&pack(&m)).unwrap();
        prop_assert_eq!(back.data(), m.data());
        prop_assert_eq!(back.kind(), m.kind());
    }

    #[test]
    fn packed_slots_hold_one_color(m in any_mosaic()) {
        let p = m.kind().period();
        let packed = pack(&m);
        prop_assert_eq!(packed.depth, p * p);
        for (i, v) in packed.data.iter().enumerate() {
            let slot = i % packed.depth;
            let cell = i / packed.depth;
            let (r, c) = ((cell / packed.cols) * p + slot / p, (cell % packed.cols) * p + slot % p);
            prop_assert_eq!(*v, m.get(r, c));
        }
    }

    #[test]
    fn shuffle_yields_valid_single_bayer(m in multi_block_kind().prop_flat_map(mosaic_of)) {
        let s = shuffle_remosaic(&m).unwrap();
        prop_assert_eq!(s.kind(), CfaKind::Single);
        let single = CfaKind::Single.layout();
        let src = m.layout().clone();
        let p = m.kind().period();
        // every value lands on a pixel of its own color within its tile
        for tr in (0..m.height()).step_by(p) {
            for tc in (0..m.width()).step_by(p) {
                for ch in ColorChannel::ALL {
                    let mut a: Vec<u64> = Vec::new();
                    let mut b: Vec<u64> = Vec::new();
                    for r in tr..tr + p {
                        for c in tc..tc + p {
                            if src.channel_at(r, c) == ch {
                                a.push(m.get(r, c).to_bits());
                            }
                            if single.channel_at(r, c) == ch {
                                b.push(s.get(r, c).to_bits());
                            }
                        }
                    }
                    a.sort_unstable();
                    b.sort_unstable();
                    prop_assert_eq!(a, b);
                }
            }
        }
        prop_assert_eq!(tile_multisets(&m, p), tile_multisets(&s, p));
    }

    #[test]
    fn channel_at_is_periodic(k in kind(), r in 0..60usize, c in 0..60usize) {
        let l = k.layout();
        let p = l.period();
        prop_assert_eq!(l.channel_at(r, c), l.channel_at(r + p, c));
        prop_assert_eq!(l.channel_at(r, c), l.channel_at(r, c + p));
        prop_assert_eq!(l.channel_at(r, c), l.channel_at(r % p, c % p));
        let s = k.block_side();
        prop_assert_eq!(l.channel_at(r, c), CfaKind::Single.layout().channel_at(r / s, c / s));
    }

    #[test]
    fn sampling_reads_the_layout_channel(k in kind(), seed in any::<u64>()) {
        let p = k.period();
        let img = RgbImage::from_fn(2 * p, 2 * p, |y, x| {
            let v = ((y * 31 + x * 17) as u64 ^ seed) % 101;
            [v as f64 / 100.0, (v as f64 / 200.0) + 0.25, 1.0 - v as f64 / 100.0]
        }).unwrap();
        let m = sample_mosaic(&img, &k.layout()).unwrap();
        for r in 0..2 * p {
            for c in 0..2 * p {
                prop_assert_eq!(m.get(r, c), img.get(r, c, k.layout().channel_at(r, c).index()));
            }
        }
        let e = make_embedding(&m).unwrap();
        for r in 0..2 * p {
            for c in 0..2 * p {
                let ch = k.layout().channel_at(r, c).index();
                prop_assert_eq!(e.at(r, c, 0), m.get(r, c));
                for code in 0..3 {
                    prop_assert_eq!(e.at(r, c, 1 + code), if code == ch { 1.0 } else { 0.0 });
                }
            }
        }
    }

    #[test]
    fn binning_scales_and_averages(m in multi_block_kind().prop_flat_map(mosaic_of), alpha in 0.0..1.0f64) {
        let s = m.kind().block_side();
        let b = bin(&m).unwrap();
        prop_assert_eq!((b.height(), b.width()), (m.height() / s, m.width() / s));
        prop_assert_eq!(b.kind(), CfaKind::Single);
        let bs = bin(&m.scaled(alpha).unwrap()).unwrap();
        for (x, y) in bs.data().iter().zip(b.data()) {
            prop_assert!((x - alpha * y).abs() < 1e-12);
        }
        for r in 0..b.height() {
            for c in 0..b.width() {
                let mean: f64 = (0..s * s).map(|i| m.get(r * s + i / s, c * s + i % s)).sum::<f64>() / (s * s) as f64;
                prop_assert!((b.get(r, c) - mean).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tensor_file_roundtrips(dims in prop::collection::vec(1..5usize, 1..4), seed in any::<u64>(), dtype in 0..3u8) {
        let n: usize = dims.iter().product();
        let vals: Vec<u64> = (0..n as u64).map(|i| seed.wrapping_mul(i + 1).rotate_left(i as u32)).collect();
        let data = match dtype {
            0 => TensorData::F32(vals.iter().map(|&v| f32::from_bits(v as u32)).collect()),
            1 => TensorData::F64(vals.iter().map(|&v| f64::from_bits(v)).collect()),
            _ => TensorData::U16(vals.iter().map(|&v| v as u16).collect()),
        };
        let t = TensorFile::new(dims.clone(), data).unwrap();
        let bytes = t.to_bytes();
        let back = TensorFile::from_bytes(&bytes).unwrap();
        prop_assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn mask_bytes_roundtrip(h in 1..20usize, w in 1..20usize, rate in 0.0..0.05f64, seed in any::<u64>()) {
        let m = make_dead_mask(h, w, rate, seed).unwrap();
        prop_assert_eq!(m.count(), (rate * (h * w) as f64).round() as usize);
        let back: DeadPixelMask = mask_from_bytes(&mask_to_bytes(&m)).unwrap();
        prop_assert_eq!(back, m);
    }
}
