"""Quantum representations of the (2, 5, infinity) triangle group from the
genus-two Hitchin connection restricted to the Veech curve.

Submodules:

- operators: exact second-order operator algebra on monomial bases
- connection: the flat connection data, Verlinde dimensions, pole residues
- transport: ODE parallel transport, hyperlogarithms, Chen series
- frobenius: local series solutions at the poles and semicircle transport
- monodromy: assembly of the representation and word evaluation
- cache, cli: on-disk artifact cache and the command-line front end
"""

__version__ = "0.1.0"
