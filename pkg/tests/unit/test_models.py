"""Unit tests for data models"""

from src.models.results import (
    CollisionEstimate,
    ExperimentResult,
    FitResult,
    HolderFit,
    ReturnRow,
)


class TestFitResult:
    """Tests for FitResult class."""

    def test_to_dict(self):
        """Test the serialized fields."""
        fit = FitResult(slope=-0.5, intercept=0.1, r2=0.99, residual_max=0.01, point_count=5)
        assert fit.to_dict() == {
            "slope": -0.5,
            "intercept": 0.1,
            "r2": 0.99,
            "residual_max": 0.01,
            "point_count": 5,
            "stderr": 0.0,
        }

    def test_holder_fit_points(self):
        """Test HolderFit starts without points."""
        fit = FitResult(slope=1.0, intercept=0.0, r2=1.0, residual_max=0.0, point_count=3)
        holder = HolderFit(beta=1.0, constant=1.0, fit=fit)
        assert holder.points == []


class TestKernelRows:
    """Tests for engine records."""

    def test_return_row_default(self):
        """Test the ledger defaults to zero."""
        row = ReturnRow(n=2, lower=0.375, upper=0.375, sup_norm=0.375)
        assert row.dropped == 0.0

    def test_collision_defaults(self):
        """Test a collision estimate is informative by default."""
        estimate = CollisionEstimate(n=1, estimate=0.4, stderr=0.01, walkers=100, seed=1)
        assert estimate.collisions == 0
        assert not estimate.low_information


class TestExperimentResult:
    """Tests for ExperimentResult class."""

    def test_exit_codes(self):
        """Test 0 for pass, 2 outside tolerance, 1 on errors."""
        passed = ExperimentResult(experiment="control", success=True, passed=True)
        outside = ExperimentResult(experiment="control", success=True, passed=False)
        failed = ExperimentResult(experiment="control", success=False)
        assert passed.exit_code == 0
        assert outside.exit_code == 2
        assert failed.exit_code == 1

    def test_errors_override_pass(self):
        """Test an error always gives exit code 1."""
        result = ExperimentResult(experiment="exit", success=True, passed=True)
        result.errors.append("ExperimentError: boom")
        assert result.has_errors()
        assert result.exit_code == 1

    def test_warnings(self):
        """Test warning bookkeeping."""
        result = ExperimentResult(experiment="exit")
        assert not result.has_warnings()
        result.warnings.append("censored")
        assert result.has_warnings()
