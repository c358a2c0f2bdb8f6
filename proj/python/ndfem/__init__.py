"""Finite element solver for non-divergence-form elliptic PDEs and
Hamilton-Jacobi-Bellman equations on 2D simplicial meshes."""

from ._ndfem import (  # noqa: F401
    Mesh,
    Problem,
    build_structured,
    check_cordes,
    eval_expression,
    gamma_lambda_weight,
    gamma_weight,
    load_problem,
    parse_problem,
    problem_mesh,
    read_mesh,
    refine_uniform,
    search_lambda,
    solve_hjb,
    solve_linear,
    __version__,
)
