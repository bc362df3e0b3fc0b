"""UAV delivery routing under ISC3 constraints."""
