import cmind

def test_name():
    try:
        assert cmind.__name__ == 'cmind'
    except Exception as e:
        raise e
