"""Multivector calculus and locally conformal Nambu-type structures."""
