use std::ffi::{CStr, CString};
use std::ptr;

use synhomeo::featkit::{epoch_features, Epoch};
use synhomeo::synnet::NetworkSnapshot;
use synhomeo_ffi::*;

struct Handle(*mut SynNetwork);

impl Handle {
    fn new() -> Self {
        let mut h = ptr::null_mut();
        assert_eq!(unsafe { syn_network_new(1.0, 1.0, 1.0, &mut h) }, SynStatus::Ok);
        assert!(!h.is_null());
        Handle(h)
    }

    fn add(&self, id: u32, feature: &[f64], xi: f64) -> SynStatus {
        let label = CString::new(format!("s{id}")).unwrap();
        unsafe { syn_network_add_node(self.0, id, label.as_ptr(), true, 1, feature.as_ptr(), feature.len(), xi) }
    }
}

impl Drop for Handle {
    fn drop(&mut self) {
        unsafe { syn_network_free(self.0) };
    }
}

fn last_error() -> String {
    let p = syn_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

/// Feature whose three blocks are each a unit vector along `axis`, plus a
/// little of `mix` along the next axis.
fn feature(axis: usize, mix: f64) -> Vec<f64> {
    let mut f = vec![0.0; syn_feature_dim(1)];
    for start in [0, 6, 11] {
        f[start + axis] = 1.0;
        f[start + axis + 1] = mix;
    }
    f
}

fn triangle() -> Handle {
    let h = Handle::new();
    for (id, mix) in [(0, 0.0), (1, 0.3), (2, 0.6)] {
        assert_eq!(h.add(id, &feature(0, mix), 0.1), SynStatus::Ok);
    }
    h
}

#[test]
fn triangle_counts_and_strengths() {
    let h = triangle();
    let (mut n, mut e) = (0usize, 0usize);
    unsafe {
        assert_eq!(syn_network_len(h.0, &mut n), SynStatus::Ok);
        assert_eq!(syn_network_edge_count(h.0, &mut e), SynStatus::Ok);
    }
    assert_eq!((n, e), (3, 3));
    let (mut sim, mut strength) = (0.0, 0.0);
    assert_eq!(unsafe { syn_network_synapse(h.0, 0, 1, &mut sim, &mut strength) }, SynStatus::Ok);
    assert!((sim - 1.0 / 1.09f64.sqrt()).abs() < 1e-12);
    assert_eq!(strength, 1.0);

    let ids = [0u32];
    assert_eq!(unsafe { syn_network_consolidate(h.0, ids.as_ptr(), 1, 1.3) }, SynStatus::Ok);
    unsafe { syn_network_synapse(h.0, 0, 1, &mut sim, &mut strength) };
    assert!((strength - 1.3).abs() < 1e-12);
    unsafe { syn_network_synapse(h.0, 1, 2, &mut sim, &mut strength) };
    assert_eq!(strength, 1.0);

    let mut mean = 0.0;
    assert_eq!(unsafe { syn_network_mean_strength(h.0, 0, &mut mean) }, SynStatus::Ok);
    assert!((mean - 1.3).abs() < 1e-12);

    assert_eq!(unsafe { syn_network_renormalize(h.0, 30.0) }, SynStatus::Ok);
    unsafe { syn_network_synapse(h.0, 1, 2, &mut sim, &mut strength) };
    assert!((strength - (-1.0f64 / 30.0).exp()).abs() < 1e-12);
}

#[test]
fn ranking_matches_importance() {
    let h = triangle();
    let mut ids = [u32::MAX; 4];
    let mut scores = [0.0; 4];
    let mut len = 0usize;
    let st = unsafe { syn_network_top_k(h.0, 0, 15, 0.2, ids.as_mut_ptr(), scores.as_mut_ptr(), 4, &mut len) };
    assert_eq!(st, SynStatus::Ok);
    assert_eq!(len, 2);
    assert_eq!(&ids[..2], &[1, 2]);
    for slot in 0..2 {
        let mut imp = 0.0;
        assert_eq!(unsafe { syn_network_importance(h.0, 0, ids[slot], 0.2, &mut imp) }, SynStatus::Ok);
        assert_eq!(imp, scores[slot]);
    }
    assert_eq!(ids[2], u32::MAX);

    let mut one = [0u32; 1];
    let mut one_score = [0.0; 1];
    let st = unsafe { syn_network_top_k(h.0, 0, 15, 0.2, one.as_mut_ptr(), one_score.as_mut_ptr(), 1, &mut len) };
    assert_eq!(st, SynStatus::Ok);
    assert_eq!((one[0], len), (1, 2));
    let st = unsafe { syn_network_top_k(h.0, 0, 15, 0.2, ptr::null_mut(), ptr::null_mut(), 0, &mut len) };
    assert_eq!((st, len), (SynStatus::Ok, 2));
}

#[test]
fn snapshot_json_parses() {
    let h = triangle();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { syn_network_snapshot_json(h.0, 7, &mut s) }, SynStatus::Ok);
    let text = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe { syn_string_free(s) };
    let snap = NetworkSnapshot::from_json(&text).unwrap();
    assert_eq!(snap.step, 7);
    assert_eq!(snap.nodes.len(), 3);
    assert_eq!(snap.edges.len(), 3);
    assert!(snap.nodes.iter().all(|n| n.is_source));
}

#[test]
fn errors_carry_codes_and_messages() {
    let h = triangle();
    assert_eq!(h.add(1, &feature(0, 0.1), 0.1), SynStatus::DuplicateNode);
    assert!(last_error().contains("duplicate"));
    assert_eq!(h.add(9, &[1.0, 2.0], 0.1), SynStatus::ShapeMismatch);

    let mut out = 0.0;
    assert_eq!(unsafe { syn_network_mean_strength(h.0, 42, &mut out) }, SynStatus::UnknownNode);
    assert_eq!(unsafe { syn_network_importance(h.0, 0, 0, 0.2, &mut out) }, SynStatus::InvalidArgument);
    assert_eq!(unsafe { syn_network_renormalize(h.0, 0.0) }, SynStatus::InvalidArgument);
    assert_eq!(unsafe { syn_network_consolidate(h.0, [7u32].as_ptr(), 1, 1.3) }, SynStatus::UnknownNode);
    assert_eq!(unsafe { syn_network_mean_strength(h.0, 0, ptr::null_mut()) }, SynStatus::NullPointer);
    assert_eq!(unsafe { syn_network_mean_strength(ptr::null(), 0, &mut out) }, SynStatus::NullPointer);
    let mut len = 0;
    let st = unsafe { syn_network_top_k(h.0, 0, 15, 0.2, ptr::null_mut(), ptr::null_mut(), 2, &mut len) };
    assert_eq!(st, SynStatus::NullPointer);

    let far = Handle::new();
    far.add(0, &feature(0, 0.0), 0.1);
    far.add(1, &feature(2, 0.0), 0.1);
    let (mut a, mut b) = (0.0, 0.0);
    assert_eq!(unsafe { syn_network_synapse(far.0, 0, 1, &mut a, &mut b) }, SynStatus::NoSynapse);

    let mut bad = ptr::null_mut();
    assert_eq!(unsafe { syn_network_new(0.0, 1.0, 1.0, &mut bad) }, SynStatus::InvalidArgument);
    assert!(bad.is_null());

    assert_eq!(unsafe { syn_network_len(h.0, &mut len) }, SynStatus::Ok);
    assert!(syn_last_error_message().is_null());
    unsafe {
        syn_network_free(ptr::null_mut());
        syn_string_free(ptr::null_mut());
    }
}

#[test]
fn invalid_utf8_label_is_rejected() {
    let h = Handle::new();
    let label = [0xffu8 as std::ffi::c_char, 0];
    let f = feature(0, 0.0);
    let st = unsafe { syn_network_add_node(h.0, 0, label.as_ptr(), false, 1, f.as_ptr(), f.len(), 0.1) };
    assert_eq!(st, SynStatus::InvalidUtf8);
    let st = unsafe { syn_network_add_node(h.0, 0, ptr::null(), false, 1, f.as_ptr(), f.len(), 0.1) };
    assert_eq!(st, SynStatus::Ok);
}

#[test]
fn extracted_features_match_the_library() {
    let rate = 100.0;
    let n = 256;
    let channels: Vec<Vec<f64>> = (0..2)
        .map(|c| (0..n).map(|i| ((i as f64) * 0.37 * (c + 1) as f64).sin() + 0.01 * i as f64).collect())
        .collect();
    let flat: Vec<f64> = channels.concat();
    let mut out = vec![0.0; syn_feature_dim(2)];
    let st = unsafe { syn_extract_features(flat.as_ptr(), 2, n, rate, out.as_mut_ptr(), out.len()) };
    assert_eq!(st, SynStatus::Ok);
    let want = epoch_features(&Epoch::new(channels, rate).unwrap()).unwrap().to_flat();
    assert_eq!(out, want);

    let st = unsafe { syn_extract_features(flat.as_ptr(), 2, n, rate, out.as_mut_ptr(), 5) };
    assert_eq!(st, SynStatus::ShapeMismatch);
    let st = unsafe { syn_extract_features(flat.as_ptr(), 2, n, 50.0, out.as_mut_ptr(), out.len()) };
    assert_eq!(st, SynStatus::InvalidArgument);
    assert!(last_error().contains("Nyquist"));
    let st = unsafe { syn_extract_features(flat.as_ptr(), 2, 8, rate, out.as_mut_ptr(), out.len()) };
    assert_eq!(st, SynStatus::InvalidArgument);
}
