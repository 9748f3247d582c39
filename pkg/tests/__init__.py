"""Test suite for topoflux."""
