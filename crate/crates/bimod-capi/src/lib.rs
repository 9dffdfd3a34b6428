//! C ABI for the bimod library.
//!
//! Handles are opaque pointers created and destroyed by the paired
//! `*_parse`/`*_new` and `*_free` functions. Every fallible call returns a
//! [`BimodStatus`]; on failure the thread-local message from
//! [`bimod_last_error_message`] describes what went wrong. Exact rationals
//! cross the boundary as `p/q` strings so no precision is lost; strings
//! returned by the library are freed with [`bimod_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};

use bimod::graph::{BipartiteGraph, Division};
use bimod::lemmas::{fuzz_lemmas, LemmaError};
use bimod::modularity::{
    bipartite_modularity, render_exact, standard_modularity, ModularityError,
};
use bimod::reduction::{
    assignment_value, build_gadget, structured_search, ReductionError, Role,
    ThreePartitionInstance, TripleAssignment,
};
use bimod::solvers::{
    alternating_optimize, brute_force_max, greedy_agglomerative, label_propagation, SolverError,
    ALTERNATING_DEFAULT_ROUNDS,
};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BimodStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    Utf8 = 2,
    /// A file-format payload failed to parse.
    Parse = 3,
    /// Invalid instance, graph, division, or assignment data.
    Invalid = 4,
    /// The operation needs a normalized instance (7 must divide the sum).
    NotNormalized = 5,
    /// Modularity is undefined on a graph without edges.
    Undefined = 6,
    /// An exhaustive operation was asked to exceed its size limit.
    TooLarge = 7,
}

/// Solver selection for [`bimod_solve`].
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BimodMethod {
    BruteForce = 0,
    Greedy = 1,
    LabelPropagation = 2,
    Alternating = 3,
}

/// Opaque bipartite graph handle (with role annotations when it came from a
/// gadget).
pub struct BimodGraph {
    graph: BipartiteGraph,
    roles: Option<Vec<Role>>,
}

/// Opaque 3-PARTITION instance handle.
pub struct BimodInstance {
    inner: ThreePartitionInstance,
}

/// Opaque division handle.
pub struct BimodDivision {
    inner: Division,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: BimodStatus, message: impl std::fmt::Display) -> BimodStatus {
    let rendered = message.to_string().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(rendered).unwrap_or_default();
    });
    status
}

fn reduction_status(e: &ReductionError) -> BimodStatus {
    match e {
        ReductionError::NotNormalized { .. } => BimodStatus::NotNormalized,
        ReductionError::SearchSpaceTooLarge { .. } => BimodStatus::TooLarge,
        _ => BimodStatus::Invalid,
    }
}

fn solver_status(e: &SolverError) -> BimodStatus {
    match e {
        SolverError::GraphTooLarge { .. } => BimodStatus::TooLarge,
        SolverError::Modularity(ModularityError::EmptyEdgeSet) => BimodStatus::Undefined,
        SolverError::Modularity(_) => BimodStatus::Invalid,
    }
}

fn lemma_status(e: &LemmaError) -> BimodStatus {
    match e {
        LemmaError::Reduction(r) => reduction_status(r),
        LemmaError::Modularity(ModularityError::EmptyEdgeSet) => BimodStatus::Undefined,
        LemmaError::UnknownLemma(_) | LemmaError::ZeroTrials => BimodStatus::Invalid,
        _ => BimodStatus::Invalid,
    }
}

/// Message for the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bimod_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

unsafe fn utf8_arg<'a>(ptr: *const c_char) -> Result<&'a str, BimodStatus> {
    if ptr.is_null() {
        return Err(fail(BimodStatus::NullArgument, "null string argument"));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|e| fail(BimodStatus::Utf8, e))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> BimodStatus {
    if out.is_null() {
        return fail(BimodStatus::NullArgument, "null output pointer");
    }
    *out = value;
    BimodStatus::Ok
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> BimodStatus {
    match CString::new(s) {
        Ok(c) => write_out(out, c.into_raw()),
        Err(e) => fail(BimodStatus::Invalid, e),
    }
}

unsafe fn borrow<'a, T>(ptr: *const T) -> Result<&'a T, BimodStatus> {
    ptr.as_ref()
        .ok_or_else(|| fail(BimodStatus::NullArgument, "null handle"))
}

/// Free a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must have been returned by a bimod function and not freed before.
#[no_mangle]
pub unsafe extern "C" fn bimod_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse a graph file (see the text format in the bimod crate).
///
/// # Safety
/// `text` must be a valid NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bimod_graph_parse(
    text: *const c_char,
    out: *mut *mut BimodGraph,
) -> BimodStatus {
    let text = match utf8_arg(text) {
        Ok(t) => t,
        Err(status) => return status,
    };
    match bimod::io::parse_graph(text) {
        Ok((graph, roles)) => {
            write_out(out, Box::into_raw(Box::new(BimodGraph { graph, roles })))
        }
        Err(e) => fail(BimodStatus::Parse, e),
    }
}

/// Render the graph back to its file format (role lines included when the
/// graph carries roles). The result is freed with [`bimod_string_free`].
///
/// # Safety
/// `g` must be a live graph handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bimod_graph_render(
    g: *const BimodGraph,
    out: *mut *mut c_char,
) -> BimodStatus {
    let g = match borrow(g) {
        Ok(g) => g,
        Err(status) => return status,
    };
    write_string(out, bimod::io::render_graph(&g.graph, g.roles.as_deref()))
}

/// Red count, blue count, and edge count of a graph.
///
/// # Safety
/// `g` must be a live graph handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn bimod_graph_counts(
    g: *const BimodGraph,
    out_red: *mut u64,
    out_blue: *mut u64,
    out_edges: *mut u64,
) -> BimodStatus {
    let g = match borrow(g) {
        Ok(g) => g,
        Err(status) => return status,
    };
    if out_red.is_null() || out_blue.is_null() || out_edges.is_null() {
        return fail(BimodStatus::NullArgument, "null output pointer");
    }
    *out_red = g.graph.red_count() as u64;
    *out_blue = g.graph.blue_count() as u64;
    *out_edges = g.graph.edge_count() as u64;
    BimodStatus::Ok
}

/// # Safety
/// `g` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn bimod_graph_free(g: *mut BimodGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Parse an instance file `{"k": ..., "elements": [...]}`.
///
/// # Safety
/// `json` must be a valid NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bimod_instance_parse(
    json: *const c_char,
    out: *mut *mut BimodInstance,
) -> BimodStatus {
    let json = match utf8_arg(json) {
        Ok(t) => t,
        Err(status) => return status,
    };
    match bimod::io::parse_instance(json) {
        Ok(inner) => write_out(out, Box::into_raw(Box::new(BimodInstance { inner }))),
        Err(e) => fail(BimodStatus::Parse, e),
    }
}

/// Build an instance from raw elements; validates the window constraints.
///
/// # Safety
/// `elements` must point to `len` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bimod_instance_new(
    k: usize,
    elements: *const u64,
    len: usize,
    out: *mut *mut BimodInstance,
) -> BimodStatus {
    if elements.is_null() {
        return fail(BimodStatus::NullArgument, "null elements pointer");
    }
    let slice = std::slice::from_raw_parts(elements, len);
    match ThreePartitionInstance::new(k, slice.to_vec()) {
        Ok(inner) => write_out(out, Box::into_raw(Box::new(BimodInstance { inner }))),
        Err(e) => fail(BimodStatus::Invalid, e),
    }
}

/// # Safety
/// `inst` must be a live instance handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bimod_instance_is_normalized(
    inst: *const BimodInstance,
    out: *mut bool,
) -> BimodStatus {
    let inst = match borrow(inst) {
        Ok(i) => i,
        Err(status) => return status,
    };
    write_out(out, inst.inner.is_normalized())
}

/// New handle with the elements scaled by 7 when needed (identity when the
/// instance is already normalized).
///
/// # Safety
/// `inst` must be a live instance handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bimod_instance_normalize(
    inst: *const BimodInstance,
    out: *mut *mut BimodInstance,
) -> BimodStatus {
    let inst = match borrow(inst) {
        Ok(i) => i,
        Err(status) => return status,
    };
    let inner = inst.inner.normalize();
    write_out(out, Box::into_raw(Box::new(BimodInstance { inner })))
}

/// Gadget order and size from the closed-form count formulas.
///
/// # Safety
/// `inst` must be a live instance handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn bimod_instance_counts(
    inst: *const BimodInstance,
    out_vertices: *mut u64,
    out_edges: *mut u64,
) -> BimodStatus {
    let inst = match borrow(inst) {
        Ok(i) => i,
        Err(status) => return status,
    };
    if out_vertices.is_null() || out_edges.is_null() {
        return fail(BimodStatus::NullArgument, "null output pointer");
    }
    match (inst.inner.vertex_count(), inst.inner.edge_count()) {
        (Ok(n), Ok(m)) => {
            *out_vertices = n;
            *out_edges = m;
            BimodStatus::Ok
        }
        (Err(e), _) | (_, Err(e)) => fail(reduction_status(&e), e),
    }
}

/// The decision threshold K(A) as an exact `p/q` string.
///
/// # Safety
/// `inst` must be a live instance handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bimod_instance_threshold(
    inst: *const BimodInstance,
    out: *mut *mut c_char,
) -> BimodStatus {
    let inst = match borrow(inst) {
        Ok(i) => i,
        Err(status) => return status,
    };
    match inst.inner.threshold() {
        Ok(k) => write_string(out, render_exact(&k)),
        Err(e) => fail(reduction_status(&e), e),
    }
}

/// # Safety
/// `inst` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn bimod_instance_free(inst: *mut BimodInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Build the gadget graph (with role annotations) for a normalized instance.
///
/// # Safety
/// `inst` must be a live instance handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bimod_gadget_build(
    inst: *const BimodInstance,
    out: *mut *mut BimodGraph,
) -> BimodStatus {
    let inst = match borrow(inst) {
        Ok(i) => i,
        Err(status) => return status,
    };
    match build_gadget(&inst.inner) {
        Ok(gadget) => {
            let roles = Some(gadget.roles().to_vec());
            let graph = gadget.graph().clone();
            write_out(out, Box::into_raw(Box::new(BimodGraph { graph, roles })))
        }
        Err(e) => fail(reduction_status(&e), e),
    }
}

/// Parse a division file against a graph.
///
/// # Safety
/// `g` must be a live graph handle; `json` a valid string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bimod_division_parse(
    g: *const BimodGraph,
    json: *const c_char,
    out: *mut *mut BimodDivision,
) -> BimodStatus {
    let g = match borrow(g) {
        Ok(g) => g,
        Err(status) => return status,
    };
    let json = match utf8_arg(json) {
        Ok(t) => t,
        Err(status) => return status,
    };
    match bimod::io::parse_division(json, &g.graph, g.roles.as_deref()) {
        Ok(inner) => write_out(out, Box::into_raw(Box::new(BimodDivision { inner }))),
        Err(e) => fail(BimodStatus::Parse, e),
    }
}

/// Build a division from one community label per vertex, in vertex order.
///
/// # Safety
/// `labels` must point to `len` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bimod_division_from_labels(
    g: *const BimodGraph,
    labels: *const usize,
    len: usize,
    out: *mut *mut BimodDivision,
) -> BimodStatus {
    let g = match borrow(g) {
        Ok(g) => g,
        Err(status) => return status,
    };
    if labels.is_null() {
        return fail(BimodStatus::NullArgument, "null labels pointer");
    }
    if len != g.graph.vertex_count() {
        return fail(
            BimodStatus::Invalid,
            format!(
                "label count {len} does not match the graph's {} vertices",
                g.graph.vertex_count()
            ),
        );
    }
    let labels = std::slice::from_raw_parts(labels, len);
    let inner = Division::new(labels.to_vec());
    write_out(out, Box::into_raw(Box::new(BimodDivision { inner })))
}

/// Render a division in the JSON file format.
///
/// # Safety
/// `g` and `d` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bimod_division_render(
    g: *const BimodGraph,
    d: *const BimodDivision,
    out: *mut *mut c_char,
) -> BimodStatus {
    let g = match borrow(g) {
        Ok(g) => g,
        Err(status) => return status,
    };
    let d = match borrow(d) {
        Ok(d) => d,
        Err(status) => return status,
    };
    if d.inner.vertex_count() != g.graph.vertex_count() {
        return fail(BimodStatus::Invalid, "division does not match the graph");
    }
    write_string(out, bimod::io::render_division(&g.graph, &d.inner, g.roles.as_deref()))
}

/// # Safety
/// `d` must be a live division handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bimod_division_community_count(
    d: *const BimodDivision,
    out: *mut u64,
) -> BimodStatus {
    let d = match borrow(d) {
        Ok(d) => d,
        Err(status) => return status,
    };
    write_out(out, d.inner.community_count() as u64)
}

/// # Safety
/// `d` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn bimod_division_free(d: *mut BimodDivision) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

unsafe fn modularity_common(
    g: *const BimodGraph,
    d: *const BimodDivision,
    out: *mut *mut c_char,
    standard: bool,
) -> BimodStatus {
    let g = match borrow(g) {
        Ok(g) => g,
        Err(status) => return status,
    };
    let d = match borrow(d) {
        Ok(d) => d,
        Err(status) => return status,
    };
    let result = if standard {
        standard_modularity(&g.graph, &d.inner)
    } else {
        bipartite_modularity(&g.graph, &d.inner)
    };
    match result {
        Ok(q) => write_string(out, render_exact(&q)),
        Err(e @ ModularityError::EmptyEdgeSet) => fail(BimodStatus::Undefined, e),
        Err(e) => fail(BimodStatus::Invalid, e),
    }
}

/// Barber's bipartite modularity Q_b, exact, as a `p/q` string.
///
/// # Safety
/// `g` and `d` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bimod_bipartite_modularity(
    g: *const BimodGraph,
    d: *const BimodDivision,
    out: *mut *mut c_char,
) -> BimodStatus {
    modularity_common(g, d, out, false)
}

/// Standard modularity Q, exact, as a `p/q` string.
///
/// # Safety
/// `g` and `d` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bimod_standard_modularity(
    g: *const BimodGraph,
    d: *const BimodDivision,
    out: *mut *mut c_char,
) -> BimodStatus {
    modularity_common(g, d, out, true)
}

/// Maximize Q_b. `seed` matters only for label propagation. On success the
/// value string and, when `out_division` is non-null, the division handle
/// are written.
///
/// # Safety
/// `g` must be a live graph handle; `out_value` must be writable;
/// `out_division` may be null.
#[no_mangle]
pub unsafe extern "C" fn bimod_solve(
    g: *const BimodGraph,
    method: BimodMethod,
    seed: u64,
    out_value: *mut *mut c_char,
    out_division: *mut *mut BimodDivision,
) -> BimodStatus {
    let g = match borrow(g) {
        Ok(g) => g,
        Err(status) => return status,
    };
    let result = match method {
        BimodMethod::BruteForce => brute_force_max(&g.graph),
        BimodMethod::Greedy => greedy_agglomerative(&g.graph),
        BimodMethod::LabelPropagation => label_propagation(&g.graph, seed),
        BimodMethod::Alternating => alternating_optimize(
            &g.graph,
            &Division::singletons(g.graph.vertex_count()),
            ALTERNATING_DEFAULT_ROUNDS,
        ),
    };
    match result {
        Ok(solved) => {
            let status = write_string(out_value, render_exact(&solved.value));
            if status != BimodStatus::Ok {
                return status;
            }
            if !out_division.is_null() {
                *out_division = Box::into_raw(Box::new(BimodDivision {
                    inner: solved.division,
                }));
            }
            BimodStatus::Ok
        }
        Err(e) => fail(solver_status(&e), e),
    }
}

/// Maximize Q_b over canonical divisions by closed-form enumeration.
/// `out_decision` reports whether the optimum equals the threshold K(A),
/// i.e. whether the instance is a yes-instance.
///
/// # Safety
/// `inst` must be a live instance handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn bimod_structured_search(
    inst: *const BimodInstance,
    out_decision: *mut bool,
    out_value: *mut *mut c_char,
) -> BimodStatus {
    let inst = match borrow(inst) {
        Ok(i) => i,
        Err(status) => return status,
    };
    match structured_search(&inst.inner) {
        Ok(outcome) => {
            let status = write_string(out_value, render_exact(&outcome.value));
            if status != BimodStatus::Ok {
                return status;
            }
            write_out(out_decision, outcome.decision)
        }
        Err(e) => fail(reduction_status(&e), e),
    }
}

/// Evaluate one element-to-biclique assignment (0-based biclique indices,
/// one per element) through the closed form. `out_decision` is true iff the
/// canonical division hits K(A) exactly.
///
/// # Safety
/// `inst` must be a live instance handle; `mapping` must point to `len`
/// readable values; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn bimod_verify_assignment(
    inst: *const BimodInstance,
    mapping: *const usize,
    len: usize,
    out_decision: *mut bool,
    out_value: *mut *mut c_char,
) -> BimodStatus {
    let inst = match borrow(inst) {
        Ok(i) => i,
        Err(status) => return status,
    };
    if mapping.is_null() {
        return fail(BimodStatus::NullArgument, "null mapping pointer");
    }
    let mapping = std::slice::from_raw_parts(mapping, len);
    let assignment = match TripleAssignment::new(&inst.inner, mapping.to_vec()) {
        Ok(a) => a,
        Err(e) => return fail(reduction_status(&e), e),
    };
    let value = match assignment_value(&inst.inner, &assignment) {
        Ok(v) => v,
        Err(e) => return fail(reduction_status(&e), e),
    };
    let threshold = match inst.inner.threshold() {
        Ok(t) => t,
        Err(e) => return fail(reduction_status(&e), e),
    };
    let status = write_string(out_value, render_exact(&value));
    if status != BimodStatus::Ok {
        return status;
    }
    write_out(out_decision, value == threshold)
}

/// Run the structural bound fuzzer. `lemma` selects one fact (1..7) or all
/// of them (0). Writes the total number of bound violations found.
///
/// # Safety
/// `inst` must be a live instance handle; `out_violations` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bimod_fuzz_lemmas(
    inst: *const BimodInstance,
    lemma: u32,
    trials: u64,
    seed: u64,
    out_violations: *mut u64,
) -> BimodStatus {
    let inst = match borrow(inst) {
        Ok(i) => i,
        Err(status) => return status,
    };
    let lemmas: Vec<usize> = if lemma == 0 {
        (1..=7).collect()
    } else {
        vec![lemma as usize]
    };
    match fuzz_lemmas(&inst.inner, &lemmas, trials, seed) {
        Ok(summary) => write_out(out_violations, summary.total_violations() as u64),
        Err(e) => fail(lemma_status(&e), e),
    }
}
