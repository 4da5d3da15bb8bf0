from functools import wraps
from typing import Any, Dict, Optional

from flask import g, jsonify, request


def require_json(*required_keys: str):
    """Decorator: the request body must be a JSON object holding required_keys"""
    def decorator(f):
        @wraps(f)
        def decorated_function(*args, **kwargs):
            payload = request.get_json(silent=True)
            if not isinstance(payload, dict):
                return jsonify({'success': False, 'error': 'Request body must be a JSON object'}), 400

            missing = [key for key in required_keys if payload.get(key) is None]
            if missing:
                return jsonify({
                    'success': False,
                    'error': f"Missing required field(s): {', '.join(missing)}"
                }), 400

            # Store the parsed body in Flask's g object
            g.payload = payload
            return f(*args, **kwargs)

        return decorated_function

    return decorator


def get_payload() -> Optional[Dict[str, Any]]:
    """Parsed body stored by require_json"""
    return getattr(g, 'payload', None)
