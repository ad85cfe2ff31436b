//! C ABI over the synaptic network and the epoch feature extractor.
//!
//! Every fallible function returns a [`SynStatus`]. On failure a message is
//! kept per thread and can be read with [`syn_last_error_message`]. Networks
//! are opaque handles created by [`syn_network_new`] and released by
//! [`syn_network_free`]. Strings returned to the caller are released with
//! [`syn_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use synhomeo::featkit::{epoch_features, Epoch, FeatureVector, FEATURES_PER_CHANNEL};
use synhomeo::synnet::{Network, NodeId, SimilarityWeights, SubjectNode};
use synhomeo::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ShapeMismatch = 3,
    UnknownNode = 4,
    DuplicateNode = 5,
    NoSynapse = 6,
    InvalidUtf8 = 7,
    Internal = 8,
    Panic = 9,
}

/// Opaque network handle.
pub struct SynNetwork(Network);

struct Failure(SynStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::UnknownNode(_) => SynStatus::UnknownNode,
            Error::DuplicateNode(_) => SynStatus::DuplicateNode,
            Error::NoSynapse(..) => SynStatus::NoSynapse,
            Error::ShapeMismatch { .. } => SynStatus::ShapeMismatch,
            Error::Json(_) | Error::Io { .. } => SynStatus::Internal,
            _ => SynStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> SynStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SynStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            SynStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(SynStatus::NullPointer, format!("{what} is null"))
}

unsafe fn net_ref<'a>(net: *const SynNetwork) -> Result<&'a Network, Failure> {
    net.as_ref().map(|n| &n.0).ok_or_else(|| null("network"))
}

unsafe fn net_mut<'a>(net: *mut SynNetwork) -> Result<&'a mut Network, Failure> {
    net.as_mut().map(|n| &mut n.0).ok_or_else(|| null("network"))
}

unsafe fn out_mut<'a, T>(out: *mut T) -> Result<&'a mut T, Failure> {
    out.as_mut().ok_or_else(|| null("output pointer"))
}

unsafe fn slice<'a, T>(data: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn syn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Length of the feature vector for `n_channels` channels.
#[no_mangle]
pub extern "C" fn syn_feature_dim(n_channels: usize) -> usize {
    n_channels * FEATURES_PER_CHANNEL
}

/// Creates an empty network with the given similarity block weights.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn syn_network_new(
    w_time: f64,
    w_freq: f64,
    w_tf: f64,
    out: *mut *mut SynNetwork,
) -> SynStatus {
    guard(|| {
        let out = out_mut(out)?;
        let weights = SimilarityWeights { time: w_time, freq: w_freq, tf: w_tf };
        weights.validate()?;
        *out = Box::into_raw(Box::new(SynNetwork(Network::new(weights))));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `net` must be null or a handle from [`syn_network_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn syn_network_free(net: *mut SynNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Adds node `id` and links it to every existing node whose similarity
/// exceeds `xi`. `feature` holds `syn_feature_dim(n_channels)` values laid
/// out as the time, frequency and time-frequency blocks in turn.
///
/// # Safety
/// `net` must be a live handle, `label` null or a NUL-terminated string,
/// and `feature` must point to `feature_len` readable values.
#[no_mangle]
pub unsafe extern "C" fn syn_network_add_node(
    net: *mut SynNetwork,
    id: u32,
    label: *const c_char,
    is_source: bool,
    n_channels: usize,
    feature: *const f64,
    feature_len: usize,
    xi: f64,
) -> SynStatus {
    guard(|| {
        let net = net_mut(net)?;
        let label = if label.is_null() {
            format!("n{id}")
        } else {
            CStr::from_ptr(label)
                .to_str()
                .map_err(|_| Failure(SynStatus::InvalidUtf8, "label is not UTF-8".into()))?
                .to_owned()
        };
        let flat = slice(feature, feature_len, "feature")?;
        let mut node = SubjectNode::new(NodeId(id), label, FeatureVector::from_flat(n_channels, flat)?);
        if is_source {
            node = node.source();
        }
        net.incorporate_node(node, xi)?;
        Ok(())
    })
}

/// Writes the node count to `out`.
///
/// # Safety
/// `net` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn syn_network_len(net: *const SynNetwork, out: *mut usize) -> SynStatus {
    guard(|| {
        *out_mut(out)? = net_ref(net)?.len();
        Ok(())
    })
}

/// Writes the synapse count to `out`.
///
/// # Safety
/// `net` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn syn_network_edge_count(net: *const SynNetwork, out: *mut usize) -> SynStatus {
    guard(|| {
        *out_mut(out)? = net_ref(net)?.edge_count();
        Ok(())
    })
}

/// Writes the similarity and strength of synapse `a`-`b`.
///
/// # Safety
/// `net` must be a live handle and both outputs writable.
#[no_mangle]
pub unsafe extern "C" fn syn_network_synapse(
    net: *const SynNetwork,
    a: u32,
    b: u32,
    similarity: *mut f64,
    strength: *mut f64,
) -> SynStatus {
    guard(|| {
        let net = net_ref(net)?;
        net.node(NodeId(a))?;
        net.node(NodeId(b))?;
        let syn = net.synapse(NodeId(a), NodeId(b)).ok_or(Error::NoSynapse(a, b))?;
        *out_mut(similarity)? = syn.similarity;
        *out_mut(strength)? = syn.strength;
        Ok(())
    })
}

/// Multiplies every synapse touching one of `ids` by `gamma` and resets
/// their clocks.
///
/// # Safety
/// `net` must be a live handle and `ids` must point to `n_ids` values.
#[no_mangle]
pub unsafe extern "C" fn syn_network_consolidate(
    net: *mut SynNetwork,
    ids: *const u32,
    n_ids: usize,
    gamma: f64,
) -> SynStatus {
    guard(|| {
        let net = net_mut(net)?;
        let ids: Vec<NodeId> = slice(ids, n_ids, "ids")?.iter().map(|i| NodeId(*i)).collect();
        net.consolidate(&ids, gamma)?;
        Ok(())
    })
}

/// Decays every synapse by its endpoints' clocks and advances all clocks.
///
/// # Safety
/// `net` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn syn_network_renormalize(net: *mut SynNetwork, lambda: f64) -> SynStatus {
    guard(|| {
        net_mut(net)?.renormalize(lambda)?;
        Ok(())
    })
}

/// Writes the mean strength of the synapses incident to `id`.
///
/// # Safety
/// `net` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn syn_network_mean_strength(net: *const SynNetwork, id: u32, out: *mut f64) -> SynStatus {
    guard(|| {
        *out_mut(out)? = net_ref(net)?.mean_strength(NodeId(id))?;
        Ok(())
    })
}

/// Writes the importance of `j` relative to `i`.
///
/// # Safety
/// `net` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn syn_network_importance(
    net: *const SynNetwork,
    i: u32,
    j: u32,
    alpha: f64,
    out: *mut f64,
) -> SynStatus {
    guard(|| {
        *out_mut(out)? = net_ref(net)?.importance(NodeId(i), NodeId(j), alpha)?;
        Ok(())
    })
}

/// Ranks the neighbours of `i` by importance. Writes up to `capacity`
/// ids and scores, and the full ranking length to `out_len`.
///
/// # Safety
/// `net` must be a live handle, `out_ids` and `out_scores` must hold
/// `capacity` values (either may be null when `capacity` is 0) and
/// `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn syn_network_top_k(
    net: *const SynNetwork,
    i: u32,
    k: usize,
    alpha: f64,
    out_ids: *mut u32,
    out_scores: *mut f64,
    capacity: usize,
    out_len: *mut usize,
) -> SynStatus {
    guard(|| {
        let ranked = net_ref(net)?.top_k(NodeId(i), k, alpha)?;
        let out_len = out_mut(out_len)?;
        let n = ranked.len().min(capacity);
        if n > 0 {
            if out_ids.is_null() || out_scores.is_null() {
                return Err(null("ranking output"));
            }
            let ids = std::slice::from_raw_parts_mut(out_ids, n);
            let scores = std::slice::from_raw_parts_mut(out_scores, n);
            for (slot, (id, score)) in ranked.iter().take(n).enumerate() {
                ids[slot] = id.0;
                scores[slot] = *score;
            }
        }
        *out_len = ranked.len();
        Ok(())
    })
}

/// Serializes the network to snapshot JSON tagged with `step`. Release the
/// string with [`syn_string_free`].
///
/// # Safety
/// `net` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn syn_network_snapshot_json(
    net: *const SynNetwork,
    step: u64,
    out: *mut *mut c_char,
) -> SynStatus {
    guard(|| {
        let out = out_mut(out)?;
        let json = net_ref(net)?.snapshot(step).to_json()?;
        *out = CString::new(json)
            .map_err(|e| Failure(SynStatus::Internal, e.to_string()))?
            .into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn syn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Extracts the feature vector of one epoch. `samples` is channel-major:
/// `n_channels` rows of `n_samples` values. `out` must hold
/// `syn_feature_dim(n_channels)` values.
///
/// # Safety
/// `samples` must point to `n_channels * n_samples` readable values and
/// `out` to `out_len` writable ones.
#[no_mangle]
pub unsafe extern "C" fn syn_extract_features(
    samples: *const f64,
    n_channels: usize,
    n_samples: usize,
    sample_rate: f64,
    out: *mut f64,
    out_len: usize,
) -> SynStatus {
    guard(|| {
        let total = n_channels
            .checked_mul(n_samples)
            .ok_or_else(|| Failure(SynStatus::InvalidArgument, "sample count overflows".into()))?;
        let dim = syn_feature_dim(n_channels);
        if out_len != dim {
            return Err(Error::ShapeMismatch { expected: dim.to_string(), actual: out_len.to_string() }.into());
        }
        let data = slice(samples, total, "samples")?;
        let channels = if n_samples == 0 {
            vec![Vec::new(); n_channels]
        } else {
            data.chunks(n_samples).map(<[f64]>::to_vec).collect()
        };
        let flat = epoch_features(&Epoch::new(channels, sample_rate)?)?.to_flat();
        if out.is_null() {
            return Err(null("output buffer"));
        }
        std::slice::from_raw_parts_mut(out, dim).copy_from_slice(&flat);
        Ok(())
    })
}
