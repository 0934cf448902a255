"""Sparse first, second and third derivatives of scalar functions recorded on a tape.

>>> from hotad import record, sin, eval_forward, edge_pushing, rev_hedir
>>> tape = record(lambda x: x[0] * x[1] * sin(x[2]), n=3)
>>> trace = eval_forward(tape, [1.0, 2.0, 1.5707963267948966])
>>> edge_pushing(tape, trace).W.get(1, 2)
1.0
>>> rev_hedir(tape, trace, [1.0, 1.0, 1.0]).Td.get(3, 3)
-3.0
"""
from .errors import (ArityError, BoundsError, EvaluationError, HotadError, MalformedTapeError,
                     OracleDomainError, ParameterError, ResourceError, ShapeError, TapeError,
                     UnknownElementalError, UnknownProblemError)
from .elementals import Elemental, catalog, lookup, partials_at
from .first_order import (adjoints, forward_tangent, forward_tangent_successors,
                          reverse_gradient)
from .oracle import FDConfig, fd_gradient, fd_hessian, fd_tensor_vec, rel_err
from .problems import ProblemSpec, density, make_problem, problem_spec
from .recording import record
from .recording import cos, exp, log, sin, sqrt, square
from .second_order import HessianResult, SweepAudit, edge_pushing, hessian_vector
from .sparse_sym import SymSparseMat
from .tape import Tape, TapeBuilder, ValueTrace, build, dump_text, eval_forward, parse_text
from .third_order import (DenseTensor3, TensorVecResult, contract, rev_hedir,
                          reverse_tensor_dense)

__version__ = "0.1.0"

__all__ = [
    "ArityError", "BoundsError", "EvaluationError", "HotadError", "MalformedTapeError",
    "OracleDomainError", "ParameterError", "ResourceError", "ShapeError", "TapeError",
    "UnknownElementalError", "UnknownProblemError",
    "Elemental", "catalog", "lookup", "partials_at",
    "adjoints", "forward_tangent", "forward_tangent_successors", "reverse_gradient",
    "FDConfig", "fd_gradient", "fd_hessian", "fd_tensor_vec", "rel_err",
    "ProblemSpec", "density", "make_problem", "problem_spec",
    "record", "cos", "exp", "log", "sin", "sqrt", "square",
    "HessianResult", "SweepAudit", "edge_pushing", "hessian_vector",
    "SymSparseMat",
    "Tape", "TapeBuilder", "ValueTrace", "build", "dump_text", "eval_forward", "parse_text",
    "DenseTensor3", "TensorVecResult", "contract", "rev_hedir", "reverse_tensor_dense",
]
