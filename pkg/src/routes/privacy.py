from flask import Blueprint, jsonify
import logging

from src.errors import PrivBootError
from src.middleware.validation import get_payload, require_json
from src.services.bootstrap import privacy_summary
from src.services.tradeoff_calculus import curve_from_spec, tradeoff_functionals

logger = logging.getLogger(__name__)

privacy_bp = Blueprint('privacy', __name__)

PRIVACY_FIELDS = ('mu', 'epsilon', 'delta', 'm', 'n', 'B')
MAX_CURVE_POINTS = 10_001


@privacy_bp.route('/privacy', methods=['POST'])
@require_json()
def convert_budget():
    """
    Budget conversions for any of mu, epsilon, delta, m, n, B:
    delta(epsilon, mu), epsilon or mu by bisection, the choose-m rule and mu*_B.
    """
    try:
        payload = get_payload()
        unknown = sorted(set(payload) - set(PRIVACY_FIELDS) - {'epsilon_scale'})
        if unknown:
            return jsonify({
                'success': False,
                'error': f"Unknown field(s): {', '.join(unknown)}"
            }), 400

        values = {key: payload.get(key) for key in PRIVACY_FIELDS}
        for key in ('m', 'n', 'B'):
            if values[key] is not None:
                values[key] = int(values[key])
        for key in ('mu', 'epsilon', 'delta'):
            if values[key] is not None:
                values[key] = float(values[key])

        result = privacy_summary(epsilon_scale=float(payload.get('epsilon_scale', 1.0)), **values)
        return jsonify({
            'success': True,
            'data': result
        }), 200

    except (PrivBootError, TypeError, ValueError) as e:
        logger.error(f"Error converting budget: {str(e)}")
        return jsonify({
            'success': False,
            'error': str(e)
        }), 400
    except Exception as e:
        logger.error(f"Error converting budget: {str(e)}")
        return jsonify({
            'success': False,
            'error': 'Internal server error'
        }), 500


@privacy_bp.route('/tradeoff', methods=['POST'])
@require_json('curve')
def sample_tradeoff():
    """Sample a Gaussian or bootstrap trade-off curve and report its functionals"""
    try:
        payload = get_payload()
        points = int(payload.get('points', 11))
        if not 2 <= points <= MAX_CURVE_POINTS:
            return jsonify({
                'success': False,
                'error': f"points must lie in [2, {MAX_CURVE_POINTS}]"
            }), 400

        curve = curve_from_spec(payload['curve'])
        data = curve.to_dict(points)
        data['functionals'] = tradeoff_functionals(curve).to_dict()
        return jsonify({
            'success': True,
            'data': data
        }), 200

    except (PrivBootError, TypeError, ValueError) as e:
        logger.error(f"Error sampling trade-off curve: {str(e)}")
        return jsonify({
            'success': False,
            'error': str(e)
        }), 400
    except Exception as e:
        logger.error(f"Error sampling trade-off curve: {str(e)}")
        return jsonify({
            'success': False,
            'error': 'Internal server error'
        }), 500
