#!/usr/bin/env python3
"""
Simple smoke test for the PrivBoot core functionality
"""
import os
import sys

sys.path.append(os.path.dirname(os.path.abspath(__file__)))


def test_imports():
    """Test that all modules can be imported correctly"""
    print("🧪 Testing Module Imports")
    print("=" * 40)

    try:
        from src.models import PrivacyBudget, TradeoffCurve, Sample, ExperimentConfig
        print("✅ Models imported successfully")
    except Exception as e:
        print(f"❌ Models import failed: {e}")
        return False

    try:
        from src.services.gdp_core import solve_budget
        from src.services.tradeoff_calculus import bootstrap_privacy_curve
        from src.services.bootstrap import gdp_m_out_of_n_bootstrap
        from src.services.blbquant import blbquant_ci
        print("✅ Services imported successfully")
    except Exception as e:
        print(f"❌ Services import failed: {e}")
        return False

    try:
        from src.routes.privacy import privacy_bp
        from src.routes.inference import inference_bp
        print("✅ Routes imported successfully")
    except Exception as e:
        print(f"❌ Routes import failed: {e}")
        return False

    return True


def test_budget_conversion():
    """Test the GDP to (epsilon, delta) conversion"""
    print("\n🔐 Testing Budget Conversion")
    print("=" * 40)

    try:
        from src.services.gdp_core import gdp_to_dp_delta, solve_budget
        from src.services.bootstrap import choose_m

        epsilon = solve_budget('epsilon', delta=0.002, mu=0.5)
        print(f"✅ epsilon for mu=0.5, delta=0.002: {epsilon:.4f}")
        if abs(epsilon - 1.234) > 0.002:
            print(f"❌ expected about 1.234")
            return False

        delta = gdp_to_dp_delta(0.5, epsilon)
        print(f"✅ delta back from epsilon: {delta:.6f}")

        m = choose_m(1000, 100)
        print(f"✅ choose_m(n=1000, B=100) = {m}")
        return m == 10

    except Exception as e:
        print(f"❌ Budget conversion test failed: {e}")
        import traceback
        traceback.print_exc()
        return False


def test_private_bootstrap():
    """Test one private m-out-of-n interval on truncated normal data"""
    print("\n🎲 Testing Private Bootstrap")
    print("=" * 40)

    try:
        import numpy as np
        from src.models import BootstrapConfig, PrivacyBudget
        from src.services.bootstrap import private_bootstrap_ci
        from src.services.estimators import bounded_mean_estimator, sample_truncated_normal

        rng = np.random.default_rng(7)
        sample = sample_truncated_normal(-5.0, 5.0, 1000, rng)
        config = BootstrapConfig(n=1000, m=10, B=100, mu=PrivacyBudget(0.5))
        draws, interval = private_bootstrap_ci(sample, bounded_mean_estimator(-5.0, 5.0), config, rng)

        print(f"✅ theta_bar: {draws.theta_bar[0]:.4f}, mu*: {draws.mu_star:.4f}")
        print(f"✅ interval: [{interval.lower[0]:.4f}, {interval.upper[0]:.4f}]")
        return bool(interval.lower[0] <= interval.upper[0])

    except Exception as e:
        print(f"❌ Private bootstrap test failed: {e}")
        import traceback
        traceback.print_exc()
        return False


def test_flask_app():
    """Test Flask app creation"""
    print("\n🌐 Testing Flask App")
    print("=" * 40)

    try:
        from src.main import app

        with app.test_client() as client:
            response = client.get('/api/health')
            print(f"✅ Health check: {response.get_json()}")
            return response.status_code == 200

    except Exception as e:
        print(f"❌ Flask app test failed: {e}")
        import traceback
        traceback.print_exc()
        return False


def main():
    """Run all tests"""
    print("🚀 PrivBoot - Core Functionality Test")
    print("=" * 60)

    tests = [
        ("Module Imports", test_imports),
        ("Budget Conversion", test_budget_conversion),
        ("Private Bootstrap", test_private_bootstrap),
        ("Flask Application", test_flask_app)
    ]

    passed = 0
    total = len(tests)

    for test_name, test_func in tests:
        print(f"\n📋 Running: {test_name}")
        if test_func():
            passed += 1
            print(f"✅ {test_name} PASSED")
        else:
            print(f"❌ {test_name} FAILED")

    print("\n" + "=" * 60)
    print(f"📊 {passed}/{total} tests passed")
    return passed == total


if __name__ == '__main__':
    sys.exit(0 if main() else 1)
