"""Test suite for co2monitor."""
