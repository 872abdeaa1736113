"""Order parameters, Schmidt spectra, Renyi entropies, tripartite mutual
information.

All entropies use the natural logarithm.  Schmidt spectra are eigenvalues
of the reduced density matrix, obtained from singular values of the
reshaped amplitude tensor, so they are accurate well below the n=0
threshold scale (the Gram-matrix route would square the condition number).
For a pure state the nonzero spectrum of a subset equals that of its
complement, which lets every entropy be computed on the smaller cut.
"""

from functools import lru_cache

import numpy as np

# Eigenvalues below this are numerical zeros from the SVD; anything more
# negative would signal corruption (cannot happen with singular values).
_CLIP_EPS = -1e-12

DEFAULT_S0_THRESHOLD = 1e-15


@lru_cache(maxsize=4)
def _diag_tables(L):
    """Per-basis-state values of the O_AFM and O_FM diagonals."""
    idx = np.arange(1 << L, dtype=np.uint64)
    mask = np.uint64((1 << L) - 1)
    pop = np.bitwise_count(idx).astype(np.float64)
    rot = ((idx << np.uint64(1)) | (idx >> np.uint64(L - 1))) & mask
    flips = np.bitwise_count(idx ^ rot).astype(np.float64)
    o_fm = (L - 2.0 * pop) / L
    o_afm = (2.0 * flips - L) / L
    return o_afm, o_fm


def _probabilities(state):
    a = state.amps
    return a.real ** 2 + a.imag ** 2


def order_parameter_afm(state):
    """<-(1/L) sum_i Z_i Z_{i+1}> with periodic wrap; 1 on Neel states."""
    table, _ = _diag_tables(state.num_qubits)
    return float(_probabilities(state) @ table)


def order_parameter_fm(state):
    """<(1/L) sum_i Z_i>; 1 on |00...0>."""
    _, table = _diag_tables(state.num_qubits)
    return float(_probabilities(state) @ table)


def _validate_subset(L, subset):
    members = tuple(subset)
    if len(members) == 0 or len(members) >= L:
        raise ValueError(
            f"subset must be a proper nonempty subset of [1, {L}], got {members}"
        )
    if len(set(members)) != len(members):
        raise ValueError(f"subset has repeated qubits: {members}")
    for q in members:
        if not 1 <= q <= L:
            raise ValueError(f"qubit {q} outside [1, {L}]")
    return members


def schmidt_spectrum(state, subset):
    """Eigenvalues of the reduced density matrix of ``subset``, descending.

    ``subset`` is any proper nonempty collection of distinct qubit indices
    (contiguity is not required).  The returned length is the smaller of
    the two cut dimensions; the omitted eigenvalues are exact zeros.
    """
    L = state.num_qubits
    members = _validate_subset(L, subset)
    axes = [q - 1 for q in members]
    axes += [i for i in range(L) if i + 1 not in set(members)]
    t = state.amps.reshape((2,) * L).transpose(axes)
    m = t.reshape(1 << len(members), -1)
    svals = np.linalg.svd(m, compute_uv=False)
    lam = svals ** 2
    if lam.min(initial=0.0) < _CLIP_EPS:
        raise ValueError("negative Schmidt weight beyond numerical tolerance")
    np.clip(lam, 0.0, None, out=lam)
    return lam  # SVD returns singular values in descending order


def renyi_entropy(spectrum, n, threshold=DEFAULT_S0_THRESHOLD):
    """n-th Renyi entropy of a Schmidt spectrum (natural log).

    n=0 is the Hartley entropy ln #{lambda > threshold}; n=1 the von
    Neumann entropy; other n use (1/(1-n)) ln sum lambda**n.  The threshold
    only enters at n=0.
    """
    lam = np.asarray(spectrum, dtype=np.float64)
    if n == 0:
        if threshold <= 0:
            raise ValueError("n=0 needs a positive threshold")
        count = int((lam > threshold).sum())
        if count == 0:
            raise ValueError("no Schmidt weight above threshold: corrupt spectrum")
        return float(np.log(count))
    pos = lam[lam > 0.0]
    if pos.size == 0:
        raise ValueError("all-zero Schmidt spectrum")
    if n == 1:
        return float(-(pos * np.log(pos)).sum())
    return float(np.log((pos ** n).sum()) / (1.0 - n))


def quarter_subsets(L):
    """The four equal quarters A, B, C, D of [1, L] (L multiple of 4)."""
    if L % 4:
        raise ValueError(f"tripartite regions need L divisible by 4, got {L}")
    q = L // 4
    a = tuple(range(1, q + 1))
    b = tuple(range(q + 1, 2 * q + 1))
    c = tuple(range(2 * q + 1, 3 * q + 1))
    d = tuple(range(3 * q + 1, L + 1))
    return a, b, c, d


def tripartite_spectra(state):
    """Schmidt spectra of the seven subsets entering I3.

    S_{A u B u C} is evaluated through the complement D (identical nonzero
    spectrum for a pure state, and a quarter of the Schmidt dimension).
    """
    a, b, c, d = quarter_subsets(state.num_qubits)
    return {
        "A": schmidt_spectrum(state, a),
        "B": schmidt_spectrum(state, b),
        "C": schmidt_spectrum(state, c),
        "AB": schmidt_spectrum(state, a + b),
        "BC": schmidt_spectrum(state, b + c),
        "AC": schmidt_spectrum(state, a + c),
        "ABC": schmidt_spectrum(state, d),
    }


def tripartite_mutual_information_from_spectra(spectra, n, threshold=DEFAULT_S0_THRESHOLD):
    s = {k: renyi_entropy(v, n, threshold) for k, v in spectra.items()}
    return (
        s["A"] + s["B"] + s["C"] - s["AB"] - s["BC"] - s["AC"] + s["ABC"]
    )


def tripartite_mutual_information(state, n, threshold=DEFAULT_S0_THRESHOLD):
    """I3 over the four equal quarters; negative and extensive in the
    volume-law phase, saturating in the area-law phase."""
    return tripartite_mutual_information_from_spectra(
        tripartite_spectra(state), n, threshold
    )


def half_cut_entropy(state, n=1, threshold=DEFAULT_S0_THRESHOLD):
    """Renyi entropy of the left half [1, L/2]."""
    L = state.num_qubits
    if L % 2:
        raise ValueError(f"half cut needs even L, got {L}")
    spectrum = schmidt_spectrum(state, tuple(range(1, L // 2 + 1)))
    return renyi_entropy(spectrum, n, threshold)


def evaluate_observables(state, names, s0_thresholds=(DEFAULT_S0_THRESHOLD,)):
    """Evaluate a set of named observables, sharing Schmidt spectra.

    Recognized names: O_AFM, O_FM, S_half, I3_1, and I3_0 (one value per
    threshold, keyed 'I3_0@<threshold:g>').
    """
    out = {}
    spectra = None
    for name in names:
        if name == "O_AFM":
            out[name] = order_parameter_afm(state)
        elif name == "O_FM":
            out[name] = order_parameter_fm(state)
        elif name == "S_half":
            out[name] = half_cut_entropy(state, n=1)
        elif name == "I3_1":
            if spectra is None:
                spectra = tripartite_spectra(state)
            out[name] = tripartite_mutual_information_from_spectra(spectra, 1)
        elif name == "I3_0":
            if spectra is None:
                spectra = tripartite_spectra(state)
            for thr in s0_thresholds:
                out[s0_observable_name(thr)] = (
                    tripartite_mutual_information_from_spectra(spectra, 0, thr)
                )
        else:
            raise ValueError(f"unknown observable {name!r}")
    return out


def s0_observable_name(threshold):
    return f"I3_0@{threshold:g}"
