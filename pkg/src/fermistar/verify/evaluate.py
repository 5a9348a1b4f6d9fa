"""JSON front end for single operations (``fermistar eval``).

A request is ``{"op": name, "args": {...}}``; a file may hold one request,
a list of them, or ``{"requests": [...]}``.  Operands use the JSON forms of
:class:`Multivector`, :class:`CliffordElement`, :class:`Metric`,
:class:`Bivector` and :class:`Polarization`.  Errors carry a JSON path such
as ``$.requests[1].args.f: terms[0]: missing 'mask'``.
"""

from __future__ import annotations

import numbers
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .. import clifford as cl
from .. import hilbert as hb
from .. import multivector as mv
from .. import polarization as pol
from .. import star as st
from .. import sw
from .. import transport as tr
from ..clifford import CliffordElement
from ..forms import Bivector, Metric, Rotation, _matrix_from_json
from ..multivector import Multivector
from ..polarization import ComplexStructure, Polarization
from ..scalars import GaussianRational, Laurent

__all__ = ["EvalError", "OPERATIONS", "evaluate", "evaluate_document", "to_jsonable", "decode"]


class EvalError(ValueError):
    """Malformed request; the message starts with the JSON path of the offending value."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class Arg:
    name: str
    kind: str
    required: bool = True


# --------------------------------------------------------------------------- decoding


def _matrix(obj, path: str) -> np.ndarray:
    if not isinstance(obj, list) or not obj:
        raise EvalError(path, "expected a non-empty list of rows")
    return _matrix_from_json(obj, len(obj))


def _metric(obj, path):
    if not isinstance(obj, dict):
        raise EvalError(path, "expected an object with 'm' and 'q'")
    return Metric.from_json(obj)


def _complex_structure(obj, path):
    if not isinstance(obj, dict) or "J" not in obj:
        raise EvalError(path, "expected an object with 'J'")
    J = _matrix(obj["J"], path + ".J")
    metric = _metric(obj["metric"], path + ".metric") if "metric" in obj else Metric.identity(len(J))
    return ComplexStructure(np.asarray(J, dtype=complex), metric)


def _polarization(obj, path):
    if isinstance(obj, dict) and "J" in obj:
        return pol.from_complex_structure(_complex_structure(obj, path))
    if not isinstance(obj, dict) or "P" not in obj or "metric" not in obj:
        raise EvalError(path, "expected an object with 'P' and 'metric' (or 'J')")
    return Polarization.from_json(obj)


def _rotation(obj, path):
    if not isinstance(obj, dict) or "gamma" not in obj:
        raise EvalError(path, "expected an object with 'gamma'")
    g = _matrix(obj["gamma"], path + ".gamma")
    metric = _metric(obj["metric"], path + ".metric") if "metric" in obj else None
    return Rotation(np.asarray(g, dtype=float), metric)


def _spin(obj, path):
    if isinstance(obj, dict) and "generators" in obj:
        gens = tuple(_matrix(X, f"{path}.generators[{k}]").astype(float)
                     for k, X in enumerate(obj["generators"]))
        metric = _metric(obj["metric"], path + ".metric") if "metric" in obj else Metric.identity(len(gens[0]))
        return tr.SpinElement(gens, metric)
    return tr.SpinElement.from_rotation(_rotation(obj, path))


def _vector(obj, path):
    if not isinstance(obj, list):
        raise EvalError(path, "expected a list")
    out = []
    for k, x in enumerate(obj):
        out.append(_scalar(x, f"{path}[{k}]"))
    return np.array([complex(x) for x in out])


def _scalar(obj, path):
    if isinstance(obj, bool):
        raise EvalError(path, "expected a number")
    if isinstance(obj, numbers.Number):
        return obj
    if isinstance(obj, list) and len(obj) == 2:
        return complex(float(obj[0]), float(obj[1]))
    if isinstance(obj, dict) and ("re" in obj or "im" in obj):
        return complex(float(obj.get("re", 0)), float(obj.get("im", 0)))
    raise EvalError(path, "expected a number, [re, im] or {re, im}")


def _list_of(kind):
    def parse(obj, path):
        if not isinstance(obj, list) or not obj:
            raise EvalError(path, "expected a non-empty list")
        return [decode(kind, x, f"{path}[{k}]") for k, x in enumerate(obj)]
    return parse


def _number(cast):
    def parse(obj, path):
        if isinstance(obj, bool) or not isinstance(obj, numbers.Number):
            raise EvalError(path, f"expected {'an integer' if cast is int else 'a number'}")
        if cast is int and int(obj) != obj:
            raise EvalError(path, "expected an integer")
        return cast(obj)
    return parse


def _index_or_vector(obj, path):
    return _number(int)(obj, path) if not isinstance(obj, list) else _vector(obj, path)


def _string(obj, path):
    if not isinstance(obj, str):
        raise EvalError(path, "expected a string")
    return obj


DECODERS: dict[str, Callable[[Any, str], Any]] = {
    "multivector": lambda o, p: Multivector.from_json(o),
    "clifford": lambda o, p: CliffordElement.from_json(o),
    "metric": _metric,
    "bivector": lambda o, p: Bivector.from_json(o),
    "rotation": _rotation,
    "spin": _spin,
    "polarization": _polarization,
    "complex_structure": _complex_structure,
    "matrix": _matrix,
    "int": _number(int),
    "float": _number(float),
    "str": _string,
    "index_or_vector": _index_or_vector,
    "bivector_list": _list_of("bivector"),
    "polarization_list": _list_of("polarization"),
}


def decode(kind: str, obj, path: str):
    """Decode one operand, prefixing any error with ``path``."""
    try:
        return DECODERS[kind](obj, path)
    except EvalError:
        raise
    except (ValueError, TypeError, KeyError, IndexError, ArithmeticError) as exc:
        raise EvalError(path, f"invalid {kind}: {exc}") from exc


# --------------------------------------------------------------------------- encoding


def _rational(x):
    return mv._json_rational(x)


def _encode_scalar(x):
    if isinstance(x, Laurent):
        items = [(p, c) for p, c in x.items()]
        if not items:
            return 0
        if len(items) == 1 and items[0][0] == 0:
            return _encode_scalar(items[0][1])
        return {"laurent": {str(p): [_rational(c.re), _rational(c.im)] for p, c in items}}
    if isinstance(x, GaussianRational):
        if x.im == 0:
            return _rational(x.re)
        return {"re": _rational(x.re), "im": _rational(x.im)}
    z = complex(x)
    return z.real if z.imag == 0 else {"re": z.real, "im": z.imag}


def _encode_matrix(a: np.ndarray):
    if a.dtype == object:
        return [[_encode_scalar(x) for x in row] for row in a]
    a = np.asarray(a)
    if not np.iscomplexobj(a) or not np.any(a.imag):
        return np.real(a).tolist()
    return [[[z.real, z.imag] for z in row] for row in a]


def to_jsonable(value):
    """JSON form of any operation result."""
    if isinstance(value, (Multivector, Metric, Bivector, Polarization)):
        return value.to_json()
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (Laurent, GaussianRational, numbers.Number)):
        return _encode_scalar(value)
    if isinstance(value, ComplexStructure):
        return {"J": _encode_matrix(value.J), "metric": value.metric.to_json()}
    if isinstance(value, hb.PolarizedState):
        return {"psi": value.psi.to_json(), "P": value.P.to_json()}
    if isinstance(value, pol.TangentVector):
        return {"dP": _encode_matrix(value.dP), "dK": _encode_matrix(value.dK)}
    if isinstance(value, tr.TransportResult):
        return {"state": value.state.to_json(), "metaplectic_phase": _encode_scalar(value.metaplectic_phase),
                "steps": value.steps, "residual": value.residual}
    if isinstance(value, np.ndarray):
        if value.ndim == 3:
            return [_encode_matrix(x) for x in value]
        if value.ndim == 1:
            return [_encode_scalar(x) for x in value]
        return _encode_matrix(value)
    if isinstance(value, (list, tuple)):
        return [to_jsonable(x) for x in value]
    raise TypeError(f"cannot encode {type(value).__name__}")


# --------------------------------------------------------------------------- registry


def _m_of(args: dict) -> int:
    for v in args.values():
        if hasattr(v, "m"):
            return v.m
    raise ValueError("cannot infer the dimension")


def _metric_of(a):
    return a.get("metric") or Metric.identity(_m_of(a))


def _path_arg(a):
    return pol.path_through(a["path"])


def _geodesic_samples(a):
    return [p for p in pol.geodesic_path(a["J"], a["X"], a.get("steps")).samples(a.get("samples", 8))]


MV, CL, MET, BIV = "multivector", "clifford", "metric", "bivector"
_opt = dict(required=False)

OPERATIONS: dict[str, tuple[tuple[Arg, ...], Callable[[dict], Any]]] = {
    # multivector core
    "wedge": ((Arg("f", MV), Arg("g", MV)), lambda a: mv.wedge(a["f"], a["g"])),
    "fermi_derivative": ((Arg("mu", "int"), Arg("f", MV)), lambda a: mv.fermi_derivative(a["mu"], a["f"])),
    "signed_derivative": ((Arg("mu", "int"), Arg("f", MV)), lambda a: mv.signed_derivative(a["mu"], a["f"])),
    "berezin_integral": ((Arg("f", MV),), lambda a: mv.berezin_integral(a["f"])),
    "exp_even": ((Arg("f", MV),), lambda a: mv.exp_even(a["f"])),
    "tensor_embed": ((Arg("f", MV), Arg("g", MV)), lambda a: mv.tensor_embed(a["f"], a["g"]).as_multivector()),
    "diagonal_pullback": ((Arg("F", MV),), lambda a: mv.diagonal_pullback(a["F"])),
    "graded_flip": ((Arg("F", MV),), lambda a: mv.graded_flip(a["F"]).as_multivector()),
    # star products
    "poisson_bracket": ((Arg("f", MV), Arg("g", MV), Arg("metric", MET, **_opt)),
                        lambda a: st.poisson_bracket(a["f"], a["g"], _metric_of(a))),
    "hamiltonian_field": ((Arg("f", MV), Arg("metric", MET, **_opt)),
                          lambda a: st.hamiltonian_field(a["f"], _metric_of(a))),
    "star_k": ((Arg("f", MV), Arg("g", MV), Arg("metric", MET, **_opt), Arg("K", BIV, **_opt),
                Arg("hbar", "float", **_opt)),
               lambda a: st.star_k(a["f"], a["g"], _metric_of(a), a.get("K"), a.get("hbar"))),
    "star_k_reference": ((Arg("f", MV), Arg("g", MV), Arg("metric", MET, **_opt), Arg("K", BIV, **_opt),
                          Arg("hbar", "float", **_opt)),
                         lambda a: st.star_k_reference(a["f"], a["g"], _metric_of(a), a.get("K"), a.get("hbar"))),
    "intertwiner": ((Arg("K", BIV), Arg("K_new", BIV), Arg("f", MV), Arg("hbar", "float", **_opt)),
                    lambda a: st.intertwiner(a["K"], a["K_new"], a["f"], a.get("hbar"))),
    "o_transport": ((Arg("path", "bivector_list"), Arg("f", MV), Arg("hbar", "float", **_opt)),
                    lambda a: st.o_transport(a["path"], a["f"], a.get("hbar"))),
    "so_action_function": ((Arg("gamma", "rotation"), Arg("f", MV)),
                           lambda a: st.so_action_function(a["gamma"], a["f"])),
    # Clifford layer
    "clifford_mul": ((Arg("x", CL), Arg("y", CL), Arg("metric", MET, **_opt), Arg("hbar", "float", **_opt)),
                     lambda a: cl.clifford_mul(a["x"], a["y"], _metric_of(a), a.get("hbar"))),
    "graded_commutator": ((Arg("x", CL), Arg("y", CL), Arg("metric", MET, **_opt)),
                          lambda a: cl.graded_commutator(a["x"], a["y"], _metric_of(a))),
    "varrho0_apply": ((Arg("f", MV), Arg("x", CL), Arg("metric", MET, **_opt), Arg("hbar", "float", **_opt)),
                      lambda a: cl.varrho0_apply(a["f"], a["x"], _metric_of(a), a.get("hbar"))),
    "quantize": ((Arg("f", MV), Arg("K", BIV, **_opt), Arg("metric", MET, **_opt), Arg("hbar", "float", **_opt)),
                 lambda a: cl.quantize(a["f"], a.get("K"), _metric_of(a), a.get("hbar"))),
    "symbol": ((Arg("x", CL), Arg("K", BIV, **_opt), Arg("metric", MET, **_opt), Arg("hbar", "float", **_opt)),
               lambda a: cl.symbol(a["x"], a.get("K"), _metric_of(a), a.get("hbar"))),
    "supertrace": ((Arg("x", CL), Arg("hbar", "float", **_opt)), lambda a: cl.supertrace(a["x"], a.get("hbar"))),
    "quantize_via_sw": ((Arg("f", MV), Arg("K", BIV, **_opt), Arg("metric", MET, **_opt)),
                        lambda a: sw.quantize_via_sw(a["f"], a.get("K"), _metric_of(a))),
    "symbol_via_supertrace": ((Arg("x", CL), Arg("K", BIV, **_opt), Arg("metric", MET, **_opt)),
                              lambda a: sw.symbol_via_supertrace(a["x"], a.get("K"), _metric_of(a))),
    "star_via_kernel": ((Arg("f", MV), Arg("g", MV), Arg("K", BIV, **_opt), Arg("metric", MET, **_opt),
                         Arg("hbar", "float", **_opt)),
                        lambda a: sw.star_via_kernel(a["f"], a["g"], a.get("K"), _metric_of(a), a.get("hbar"))),
    "so_action_clifford": ((Arg("gamma", "rotation"), Arg("x", CL), Arg("metric", MET, **_opt)),
                           lambda a: cl.so_action_clifford(a["gamma"], a["x"], a.get("metric"))),
    # polarisations
    "from_complex_structure": ((Arg("J", "complex_structure"),), lambda a: pol.from_complex_structure(a["J"])),
    "kp_lambda": ((Arg("P", "polarization"),), lambda a: pol.kp_lambda(a["P"])),
    "retraction": ((Arg("P", "polarization"),), lambda a: pol.retraction(a["P"])),
    "transversal": ((Arg("J", "complex_structure"), Arg("J_prime", "complex_structure")),
                    lambda a: pol.transversal(a["J"], a["J_prime"])),
    "validate_tangent": ((Arg("P", "polarization"), Arg("dP", "matrix")),
                         lambda a: pol.validate_tangent(a["P"], a["dP"])),
    "tangent_space_basis": ((Arg("P", "polarization"),), lambda a: pol.tangent_space_basis(a["P"])),
    "kahler_form": ((Arg("J", "complex_structure"), Arg("dJ1", "matrix"), Arg("dJ2", "matrix")),
                    lambda a: pol.kahler_form(a["J"], a["dJ1"], a["dJ2"])),
    "curvature_form": ((Arg("P", "polarization"), Arg("dP1", "matrix"), Arg("dP2", "matrix")),
                       lambda a: pol.curvature_form(a["P"].P, a["dP1"], a["dP2"])),
    "geodesic_path": ((Arg("J", "complex_structure"), Arg("X", "matrix"), Arg("steps", "int", **_opt),
                       Arg("samples", "int", **_opt)), _geodesic_samples),
    # states
    "covariant_derivative": ((Arg("v", "index_or_vector"), Arg("psi", MV), Arg("metric", MET, **_opt)),
                             lambda a: hb.covariant_derivative(a["v"], a["psi"], _metric_of(a))),
    "prequantum_op": ((Arg("f", MV), Arg("psi", MV), Arg("metric", MET, **_opt)),
                      lambda a: hb.prequantum_op(a["f"], a["psi"], _metric_of(a))),
    "polarized_basis": ((Arg("P", "polarization"), Arg("hbar", "float")),
                        lambda a: [s.psi for s in hb.polarized_basis(a["P"], a["hbar"])]),
    "is_polarized": ((Arg("psi", MV), Arg("P", "polarization")), lambda a: hb.is_polarized(a["psi"], a["P"])),
    "decompose": ((Arg("psi", MV), Arg("P", "polarization")),
                  lambda a: (lambda hp: [hp[0].psi, hp[1]])(hb.decompose(a["psi"], a["P"]))),
    "star_on_state": ((Arg("f", MV), Arg("psi", MV), Arg("P", "polarization")),
                      lambda a: hb.star_on_state(a["f"], a["psi"], a["P"])),
    "hermitian_pairing": ((Arg("psi1", MV), Arg("psi2", MV)), lambda a: hb.hermitian_pairing(a["psi1"], a["psi2"])),
    "so_action_section": ((Arg("gamma", "rotation"), Arg("psi", MV)),
                          lambda a: hb.so_action_section(a["gamma"], a["psi"])),
    "h_transport": ((Arg("path", "polarization_list"), Arg("psi", MV), Arg("steps", "int", **_opt)),
                    lambda a: tr.h_transport(_path_arg(a), a["psi"], a.get("steps"))),
    "metaplectic_transport": ((Arg("path", "polarization_list"), Arg("psi", MV), Arg("steps", "int", **_opt)),
                              lambda a: tr.metaplectic_transport(_path_arg(a), a["psi"], a.get("steps"))),
    "rho": ((Arg("P", "polarization"), Arg("gamma", "spin"), Arg("psi", MV), Arg("steps", "int", **_opt)),
            lambda a: tr.rho(a["P"], a["gamma"], a["psi"], a.get("steps"))),
    "rho_hat": ((Arg("P", "polarization"), Arg("spin", "spin"), Arg("psi", MV), Arg("steps", "int", **_opt)),
                lambda a: tr.rho_hat(a["P"], a["spin"], a["psi"], a.get("steps"))),
}


def evaluate(request, path: str = "$") -> Any:
    """Run one request and return the JSON form of its result."""
    if not isinstance(request, dict):
        raise EvalError(path, "request must be an object with 'op' and 'args'")
    op = request.get("op")
    if op not in OPERATIONS:
        raise EvalError(f"{path}.op", f"unknown operation {op!r}")
    raw = request.get("args", {})
    if not isinstance(raw, dict):
        raise EvalError(f"{path}.args", "expected an object")
    params, fn = OPERATIONS[op]
    known = {a.name for a in params}
    extra = sorted(set(raw) - known)
    if extra:
        raise EvalError(f"{path}.args.{extra[0]}", f"unexpected argument for {op}")
    args = {}
    for a in params:
        if a.name not in raw:
            if a.required:
                raise EvalError(f"{path}.args", f"missing argument {a.name!r} for {op}")
            continue
        args[a.name] = decode(a.kind, raw[a.name], f"{path}.args.{a.name}")
    try:
        result = fn(args)
    except EvalError:
        raise
    except Exception as exc:
        raise EvalError(path, f"{op} failed: {type(exc).__name__}: {exc}") from exc
    return to_jsonable(result)


def evaluate_document(doc) -> Any:
    """Evaluate a single request, a list of requests or ``{"requests": [...]}``."""
    if isinstance(doc, dict) and "requests" in doc:
        if not isinstance(doc["requests"], list):
            raise EvalError("$.requests", "expected a list")
        return [evaluate(r, f"$.requests[{k}]") for k, r in enumerate(doc["requests"])]
    if isinstance(doc, list):
        return [evaluate(r, f"$[{k}]") for k, r in enumerate(doc)]
    return evaluate(doc)
