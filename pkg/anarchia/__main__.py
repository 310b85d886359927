from anarchia.app import main

main()
