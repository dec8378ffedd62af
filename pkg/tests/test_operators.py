import numpy as np
import pytest

from fcls import operators as ops
from fcls.errors import ConstructionError, ValidationError

from oracles import cimmino_step, kaczmarz_sweep


def random_system(rng, max_m=20, max_n=30):
    m = int(rng.integers(1, max_m + 1))
    n = int(rng.integers(1, max_n + 1))
    a = rng.uniform(-1.0, 1.0, (m, n))
    while (np.linalg.norm(a, axis=1) < 1e-6).any():
        a = rng.uniform(-1.0, 1.0, (m, n))
    b = rng.standard_normal(m)
    return a, b


class TestKaczmarz:
    def test_identity_matrix_by_hand(self):
        # For a = I the sweep lands on b no matter the start: T = 0, R = I.
        q = ops.build_kaczmarz(np.eye(2))
        assert (q.step_matrix == 0.0).all()
        assert (q.data_matrix == np.eye(2)).all()

    def test_stacked_ones_by_hand(self):
        # a = [[1], [1]]: the second row step overwrites the first, so the
        # sweep returns b_2 regardless of x: T = [[0]], R = [[0, 1]].
        q = ops.build_kaczmarz([[1.0], [1.0]])
        assert q.step_matrix.shape == (1, 1)
        assert q.step_matrix[0, 0] == 0.0
        assert (q.data_matrix == np.array([[0.0, 1.0]])).all()

    def test_matches_row_sweep_oracle(self):
        rng = np.random.default_rng(10)
        for _ in range(10):
            a, b = random_system(rng, max_m=10, max_n=12)
            for lam in (0.3, 1.0, 1.7):
                q = ops.build_kaczmarz(a, relaxation=lam)
                x = rng.standard_normal(a.shape[1])
                expect = kaczmarz_sweep(a, b, x, relaxation=lam)
                scale = 1.0 + np.linalg.norm(expect)
                assert np.linalg.norm(q.apply(x, b) - expect) <= 1e-12 * scale

    def test_zero_row_names_index(self):
        a = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]])
        with pytest.raises(ConstructionError, match="row 1"):
            ops.build_kaczmarz(a)

    @pytest.mark.parametrize("lam", [0.0, 2.0, -0.5, 2.5])
    def test_relaxation_bounds(self, lam):
        with pytest.raises(ConstructionError, match="relaxation"):
            ops.build_kaczmarz(np.eye(2), relaxation=lam)

    def test_properties_hold(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            a, _ = random_system(rng)
            for lam in (0.5, 1.0, 1.5):
                report = ops.validate_properties(ops.build_kaczmarz(a, lam), a)
                assert report.ok, str(report)


class TestCimmino:
    def test_identity_matrix_by_hand(self):
        # a = I2, omega 1, w = (1/2, 1/2): T = I - diag(1/2) = 0.5 I, R = 0.5 I.
        q = ops.build_cimmino(np.eye(2))
        assert (q.step_matrix == 0.5 * np.eye(2)).all()
        assert (q.data_matrix == 0.5 * np.eye(2)).all()

    def test_matches_simultaneous_step_oracle(self):
        rng = np.random.default_rng(12)
        for _ in range(10):
            a, b = random_system(rng, max_m=10, max_n=12)
            q = ops.build_cimmino(a, omega=1.3)
            x = rng.standard_normal(a.shape[1])
            expect = cimmino_step(a, b, x, omega=1.3)
            assert np.linalg.norm(q.apply(x, b) - expect) <= 1e-12 * (1 + np.linalg.norm(expect))

    def test_custom_weights_sum_check(self):
        with pytest.raises(ConstructionError, match="sum to 1"):
            ops.build_cimmino(np.eye(2), weights=[0.6, 0.6])

    def test_nonpositive_weight_rejected(self):
        with pytest.raises(ConstructionError, match="weight"):
            ops.build_cimmino(np.eye(2), weights=[1.0, 0.0])

    def test_equals_diagonal_weighting_bitwise(self):
        rng = np.random.default_rng(13)
        a, _ = random_system(rng, max_m=8, max_n=9)
        m = a.shape[0]
        w = np.full(m, 1.0 / m)
        row_nrm2 = np.einsum("ij,ij->i", a, a)
        via_dw = ops.build_diagonal_weighting(a, w / row_nrm2, omega=1.0)
        via_cimmino = ops.build_cimmino(a)
        assert (via_dw.step_matrix == via_cimmino.step_matrix).all()
        assert (via_dw.data_matrix == via_cimmino.data_matrix).all()

    def test_properties_hold(self):
        rng = np.random.default_rng(14)
        for _ in range(5):
            a, _ = random_system(rng)
            report = ops.validate_properties(ops.build_cimmino(a), a)
            assert report.ok, str(report)


class TestDiagonalWeighting:
    def test_rejects_nonpositive_diagonal(self):
        with pytest.raises(ConstructionError, match="diagonal entry"):
            ops.build_diagonal_weighting(np.eye(2), [1.0, -2.0])

    def test_construction_fails_on_bad_omega(self):
        # omega = 3 on the identity gives T = -2 I: the restricted norm is 2.
        with pytest.raises(ConstructionError, match="contraction"):
            ops.build_diagonal_weighting(np.eye(2), [1.0, 1.0], omega=3.0)

    def test_free_diagonal_passes_validation(self):
        rng = np.random.default_rng(15)
        a, _ = random_system(rng, max_m=8, max_n=9)
        d = np.full(a.shape[0], 1.0 / np.linalg.norm(a) ** 2)
        q = ops.build_diagonal_weighting(a, d)
        assert ops.validate_properties(q, a).ok


class TestLandweber:
    def test_diag_example_by_hand(self):
        # a = diag(2, 1), omega = 1/4: T = diag(0, 3/4), R = diag(1/2, 1/4),
        # restricted norm max(|1 - 1|, |1 - 1/4|) = 3/4.
        sched = ops.build_landweber_schedule(np.diag([2.0, 1.0]), omegas=[0.25])
        q = sched.at(0)
        assert np.allclose(q.step_matrix, np.diag([0.0, 0.75]), atol=1e-15)
        assert np.allclose(q.data_matrix, np.diag([0.5, 0.25]), atol=1e-15)
        report = ops.validate_properties(q, np.diag([2.0, 1.0]))
        assert abs(report.contraction_norm - 0.75) <= 1e-12

    def test_default_step_size(self):
        # Empty omegas: a single terminal member with omega = 1 / rho^2.
        sched = ops.build_landweber_schedule(np.diag([2.0, 1.0]))
        assert len(sched) == 1
        q = sched.at(5)  # terminal repetition
        assert np.allclose(q.step_matrix, np.diag([0.0, 0.75]), atol=1e-15)

    def test_upper_bound_rejected_citing_relation(self):
        a = np.diag([2.0, 1.0])
        with pytest.raises(ConstructionError, match=r"2/rho\(a\)\^2"):
            ops.build_landweber_schedule(a, omegas=[0.5])  # exactly 2 / rho^2

    @pytest.mark.parametrize("w", [0.0, -0.1])
    def test_nonpositive_step_rejected(self, w):
        with pytest.raises(ConstructionError, match="omega"):
            ops.build_landweber_schedule(np.eye(2), omegas=[w])

    def test_closed_form_restricted_norm(self):
        # The restricted norm equals max_i |1 - omega sigma_i^2| over the
        # nonzero singular values.
        rng = np.random.default_rng(16)
        for _ in range(5):
            a, _ = random_system(rng)
            fac = np.linalg.svd(a, compute_uv=False)
            rank = int((fac > max(a.shape) * fac[0] * 1e-12).sum())
            rho = fac[0]
            for w in np.linspace(0.2, 1.8, 4) / rho**2:
                sched = ops.build_landweber_schedule(a, omegas=[w])
                got = ops.validate_properties(sched.at(0), a).contraction_norm
                expect = max(abs(1.0 - w * s**2) for s in fac[:rank])
                assert abs(got - expect) <= 1e-10

    def test_schedule_indexing(self):
        a = np.diag([2.0, 1.0])
        sched = ops.build_landweber_schedule(a, omegas=[0.1, 0.2, 0.3])
        assert len(sched) == 3
        assert sched.at(0).label == "landweber(omega=0.1)"
        assert sched.at(2).label == "landweber(omega=0.3)"
        assert sched.at(99).label == "landweber(omega=0.3)"

    def test_zero_matrix_rejected(self):
        with pytest.raises(ConstructionError, match="spectral norm 0"):
            ops.build_landweber_schedule(np.zeros((2, 2)))


class TestValidateProperties:
    def test_shape_mismatch(self):
        q = ops.build_cimmino(np.eye(2))
        with pytest.raises(ValidationError, match="shape"):
            ops.validate_properties(q, np.eye(3))

    def test_report_fields_nonnegative(self):
        q = ops.build_cimmino(np.eye(2))
        report = ops.validate_properties(q, np.eye(2))
        assert report.splitting_defect >= 0.0
        assert report.range_defect >= 0.0
        assert report.null_fix_defect >= 0.0
        assert report.ok
        assert report.first_failure is None

    def test_all_methods_on_random_batch(self):
        rng = np.random.default_rng(17)
        for _ in range(8):
            a, _ = random_system(rng)
            rho = np.linalg.norm(a, 2)
            built = [
                ops.build_kaczmarz(a),
                ops.build_cimmino(a),
                ops.build_landweber_schedule(a, omegas=[1.0 / rho**2]).at(0),
                ops.build_diagonal_weighting(a, np.full(a.shape[0], 1.0 / np.linalg.norm(a) ** 2)),
            ]
            for q in built:
                report = ops.validate_properties(q, a)
                assert report.ok, f"{q.label}: {report}"
                scale = 1.0 + np.linalg.norm(a)
                assert report.splitting_defect <= 1e-10 * scale
                assert report.range_defect <= 1e-10
                assert report.contraction_norm <= 1.0 - 1e-8
                assert report.operator_norm <= 1.0 + 1e-12


class TestCertifyNonexpansiveness:
    def test_defects_small_for_built_operators(self):
        rng = np.random.default_rng(18)
        a, b = random_system(rng, max_m=12, max_n=15)
        for q in (ops.build_kaczmarz(a), ops.build_cimmino(a)):
            report = ops.certify_nonexpansiveness(q, a, b, samples=300)
            assert report.max_defect <= 1e-12
            assert report.equality_defect <= 1e-10
            assert report.orthogonality_defect <= 1e-10


class TestMinimizeFixedPointResidual:
    def test_worked_example_reaches_zero(self):
        # Stacked-ones system with b = (1, 0): q(x) = b_2 = 0 for every x,
        # so the unique minimizer of |x - q(x)|^2 is x = 0 with value 0.
        q = ops.build_kaczmarz([[1.0], [1.0]])
        x = ops.minimize_fixed_point_residual(q, [1.0, 0.0])
        assert x.shape == (1,)
        assert abs(x[0]) <= 1e-14
        assert np.linalg.norm(x - q.apply(x, np.array([1.0, 0.0]))) <= 1e-14

    def test_normal_equations_residual(self):
        rng = np.random.default_rng(19)
        a, b = random_system(rng, max_m=10, max_n=8)
        q = ops.build_cimmino(a)
        n = q.n
        s = np.full((n, n), 1.0 / n)  # averaging smoother
        x = ops.minimize_fixed_point_residual(q, b, smoothing=s)
        mmat = np.eye(n) - s @ q.step_matrix
        c = s @ (q.data_matrix @ b)
        resid = np.linalg.norm(mmat.T @ (mmat @ x - c))
        assert resid <= 1e-9 * (1.0 + np.linalg.norm(c))

    def test_global_minimality_sampled(self):
        rng = np.random.default_rng(20)
        a, b = random_system(rng, max_m=8, max_n=6)
        q = ops.build_cimmino(a)
        n = q.n
        s = np.eye(n)
        x = ops.minimize_fixed_point_residual(q, b, smoothing=s)

        def g(v):
            return np.linalg.norm(v - s @ q.apply(v, b)) ** 2

        best = g(x)
        for _ in range(100):
            assert best <= g(x + rng.standard_normal(n)) + 1e-12

    def test_smoothing_shape_check(self):
        q = ops.build_cimmino(np.eye(2))
        with pytest.raises(ValidationError, match="smoothing"):
            ops.minimize_fixed_point_residual(q, [1.0, 2.0], smoothing=np.eye(3))
