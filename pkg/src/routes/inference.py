from flask import Blueprint, jsonify
import logging

import numpy as np

from src.errors import PrivBootError
from src.middleware.validation import get_payload, require_json
from src.models.inference import Sample
from src.services.estimators import bounded_mean_estimator, regularized_logistic_estimator
from src.services.experiments import B_SIGMA, private_interval
from src.settings import settings

logger = logging.getLogger(__name__)

inference_bp = Blueprint('inference', __name__)

ALLOWED_METHODS = {'m_out_of_n', 'n_out_of_n', 'blbquant'}
ALLOWED_ESTIMATORS = {'mean', 'logistic'}


def _estimator_for(payload, sample: Sample):
    if payload.get('estimator', 'mean') == 'logistic':
        return regularized_logistic_estimator(dimension=sample.dimension)
    return bounded_mean_estimator(float(payload['lower']), float(payload['upper']), dimension=sample.dimension)


@inference_bp.route('/ci', methods=['POST'])
@require_json('data', 'B', 'mu')
def confidence_interval():
    """
    Private confidence interval for the posted records.

    The mean needs `lower` and `upper` bounds of the record domain; logistic
    regression needs `labels` in {-1, +1}.
    """
    try:
        payload = get_payload()
        method = payload.get('method', 'm_out_of_n')
        estimator_name = payload.get('estimator', 'mean')

        if method not in ALLOWED_METHODS:
            return jsonify({
                'success': False,
                'error': f"Invalid method. Allowed: {', '.join(sorted(ALLOWED_METHODS))}"
            }), 400
        if estimator_name not in ALLOWED_ESTIMATORS:
            return jsonify({
                'success': False,
                'error': f"Invalid estimator. Allowed: {', '.join(sorted(ALLOWED_ESTIMATORS))}"
            }), 400
        if estimator_name == 'mean' and (payload.get('lower') is None or payload.get('upper') is None):
            return jsonify({
                'success': False,
                'error': 'The mean estimator needs lower and upper bounds'
            }), 400

        sample = Sample(
            records=np.asarray(payload['data'], dtype=float),
            labels=payload.get('labels'),
            lower=payload.get('lower'),
            upper=payload.get('upper'),
        )
        estimator = _estimator_for(payload, sample)
        seed = int(payload.get('seed', settings.default_seed))
        m = payload.get('m')

        interval = private_interval(
            method, sample, estimator,
            B=int(payload['B']),
            mu=float(payload['mu']),
            alpha=float(payload.get('alpha', 0.05)),
            rng=np.random.default_rng(seed),
            m=None if m is None else int(m),
            delta=payload.get('delta'),
            b_sigma=B_SIGMA['truncated_normal_mean' if estimator_name == 'mean' else 'logistic_census'],
            workers=settings.threads,
        )
        logger.info(f"Computed {method} interval on {sample.size} records")

        return jsonify({
            'success': True,
            'data': {
                'method': method,
                'estimator': estimator.name,
                'n': sample.size,
                'seed': seed,
                'theta_bar': None if interval.center is None else interval.center.tolist(),
                'interval': interval.to_dict()
            }
        }), 200

    except (PrivBootError, TypeError, ValueError) as e:
        logger.error(f"Error computing confidence interval: {str(e)}")
        return jsonify({
            'success': False,
            'error': str(e)
        }), 400
    except Exception as e:
        logger.error(f"Error computing confidence interval: {str(e)}")
        return jsonify({
            'success': False,
            'error': 'Internal server error'
        }), 500
