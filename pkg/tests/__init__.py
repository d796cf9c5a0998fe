"""Tests for reminiq"""
